//! AIS acquisition: feed polling, region filtering, CSV import and export,
//! the live vessel cache and the historical record store.

pub mod cache;
pub mod csv_io;
pub mod feed;
pub mod region;
pub mod store;

pub use cache::{CacheEntry, Clock, ManualClock, SystemClock, VesselCache, DEFAULT_TTL_S};
pub use csv_io::{export_csv, import_csv, CsvError, Imported, RowError};
pub use feed::{FeedClient, FeedError, PollOutcome, RetryPolicy};
pub use region::{filter_records, load_regions, FilterStats, RegionDefinition, Verdict};
pub use store::{FileStore, MemoryStore, RecordStore, StoreError};
pub use urnmap_core::vessel::{status_filter, DISPLAYED_STATUSES};
