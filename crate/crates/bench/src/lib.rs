//! Fixed instances shared by the benchmarks.

use naeq_core::{AdvertisingMarket, GameSpec, LinearPriceMarket, TeamProductionSpec};

pub fn motivating() -> GameSpec {
    LinearPriceMarket::motivating_example().spec()
}

pub fn oligopoly(n: usize) -> GameSpec {
    LinearPriceMarket::symmetric(n, 30.0, 1.5, 0.9)
        .expect("valid market")
        .spec()
}

pub fn advertising() -> AdvertisingMarket {
    AdvertisingMarket::symmetric(5.0, 1.0, 0.4, 1.0).expect("valid market")
}

pub fn team() -> TeamProductionSpec {
    TeamProductionSpec::new(3, 10.0, 0.2).expect("valid team")
}
