pub mod audit;
pub mod ingest;
pub mod locator;
pub mod model;
pub mod notes;
pub mod schema_map;
pub mod sqlite;
pub mod timestamp;
pub mod whatsapp;
pub mod viber;
pub mod integrity;
pub mod media;
pub mod report;
pub mod pipeline;
