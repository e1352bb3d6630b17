//! Closed-form applications: linear price competition, advertising and
//! team production, plus the three-firm circle game.

mod advertising;
mod circle;
mod linear;
mod team;

pub use advertising::{advertising_alpha_star, advertising_equilibrium, advertising_nae, AdvertisingMarket};
pub use circle::CircleGame;
pub use linear::{
    duopoly_alpha_star, price_alpha_equilibrium, price_duopoly_nae, price_nash, price_symmetric_nae,
    symmetric_alpha_star, symmetric_price, LinearPriceMarket,
};
pub use team::{team_production_nae, TeamProductionSpec};
