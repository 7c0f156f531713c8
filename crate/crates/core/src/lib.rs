#![allow(clippy::needless_range_loop)]

pub mod derive;
pub mod exactpoly;
pub mod exec;
pub mod geometry;
pub mod linalg;
pub mod numeric;
pub mod operator;
pub mod oracle;
pub mod rootsys;
