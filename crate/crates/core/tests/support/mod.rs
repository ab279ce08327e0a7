#![allow(dead_code)]

pub mod bigfixed;
