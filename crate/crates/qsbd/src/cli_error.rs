use datasetbuild::DatasetError;
use evaluation::EvalError;
use fusionmodel::FusionError;
use geocore::GeoError;
use neuralnet::NetError;
use synthscene::SynthError;
use training::TrainError;

/// Exit-code namespace: 1 parse, 2 config, 3 runtime, 4 numeric divergence.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn parse(message: impl Into<String>) -> Self {
        CliError { code: 1, kind: "parse", message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError { code: 2, kind: "config", message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError { code: 3, kind: "runtime", message: message.into() }
    }

    pub fn divergence(message: impl Into<String>) -> Self {
        CliError { code: 4, kind: "numeric-divergence", message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        self.code
    }

    /// Machine-readable error envelope for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "code": self.code, "kind": self.kind, "message": self.message }
        })
        .to_string()
    }
}

impl From<GeoError> for CliError {
    fn from(e: GeoError) -> Self {
        match &e {
            GeoError::Io(_) => CliError::runtime(e.to_string()),
            _ => CliError::parse(e.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match &e {
            DatasetError::Geo(g) => match g {
                GeoError::Io(_) => CliError::runtime(e.to_string()),
                _ => CliError::parse(e.to_string()),
            },
            DatasetError::ManifestMismatch(_) | DatasetError::Json(_) => {
                CliError::parse(e.to_string())
            }
            DatasetError::TooFewRecords(_) => CliError::config(e.to_string()),
            DatasetError::Io(_) => CliError::runtime(e.to_string()),
        }
    }
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        match &e {
            NetError::ConfigMismatch(_) | NetError::ShapeMismatch { .. } => {
                CliError::config(e.to_string())
            }
            NetError::ChecksumMismatch | NetError::BadCheckpoint(_) => {
                CliError::parse(e.to_string())
            }
            NetError::Io(_) => CliError::runtime(e.to_string()),
        }
    }
}

impl From<FusionError> for CliError {
    fn from(e: FusionError) -> Self {
        match e {
            FusionError::Net(n) => n.into(),
            FusionError::Config(_) | FusionError::MissingModality { .. } => {
                CliError::config(e.to_string())
            }
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::DivergedLoss { .. } => CliError::divergence(e.to_string()),
            TrainError::SingleClassTrainSet | TrainError::LengthMismatch { .. } => {
                CliError::config(e.to_string())
            }
            TrainError::Fusion(f) => f.into(),
            TrainError::Eval(ev) => ev.into(),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match &e {
            SynthError::Io(_) => CliError::runtime(e.to_string()),
            SynthError::Geo(_) | SynthError::Json(_) => CliError::parse(e.to_string()),
            _ => CliError::config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::parse(e.to_string())
    }
}
