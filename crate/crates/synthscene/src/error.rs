use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("cannot place {requested} buildings: the street grid has {lots} lots (extent {extent} m)")]
    PlacementOverflow {
        requested: usize,
        lots: usize,
        extent: f64,
    },

    #[error("a campaign needs at least 2 cities for leave-one-city-out, got {0}")]
    TooFewCities(usize),

    #[error("bad scene config: {0}")]
    Config(String),

    #[error(transparent)]
    Geo(#[from] geocore::GeoError),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
