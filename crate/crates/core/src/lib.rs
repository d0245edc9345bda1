pub mod cli;
pub mod geom;
pub mod glare;
pub mod hdr_io;
pub mod layout;
pub mod photometry;
pub mod projection;
pub mod renderer;
pub mod skymodel;
