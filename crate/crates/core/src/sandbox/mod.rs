//! The world agents live in: catalog, shopping system, social medium,
//! social-influence injection and the round-based simulation loop.

mod catalog;
mod events;
pub mod fixtures;
mod shop;
mod snapshot;
mod social;
mod world;

pub use catalog::{histories, load_catalog, load_purchases, parse_catalog, parse_purchases, Catalog, Product, PurchaseRecord};
pub use events::{Event, EventKind, EventLog};
pub use shop::{build_recommendation_list, recommend, recommendation_weights, search, RecommendationList, RecommenderConfig};
pub use snapshot::{load_snapshot, read_snapshot, save_snapshot, write_snapshot, Snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use social::{injection_text, Polarity, SocialEvent, SocialKind};
pub(crate) use world::product_line;
pub use world::{run_simulation, LiveStreamRecord, Purchase, ShopSession, WorldState};
