pub mod api;
pub mod binder;
pub mod cli;
pub mod config;
pub mod demo;
pub mod digest;
pub mod docserver;
pub mod fsutil;
pub mod ingest;
pub mod ledger;
pub mod mail;
pub mod model;
pub mod net;
pub mod policy;
pub mod search;
pub mod stats;
pub mod summary;
