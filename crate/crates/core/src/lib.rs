pub mod api;
pub mod clock;
pub mod economy;
pub mod governance;
pub mod journal;
pub mod model;
pub mod node;
pub mod primitives;
pub mod registry;
pub mod sim;
pub mod store;

pub use clock::{Clock, ManualClock, SystemClock};
pub use primitives::{Address, Amount, UnixTime, UNITS_PER_PCT};
