#![allow(dead_code)]

pub mod assets;
