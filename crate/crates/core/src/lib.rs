//! Sign-language animation compiler: lexicon, motion synthesis and X3D output.

pub mod compiler;
pub mod interlingua;
pub mod lexicon;
pub mod numfmt;
pub mod rotation;
pub mod skeleton;
pub mod x3d;
