use thiserror::Error;

/// Crate-wide error type. Session orchestration wraps failures in
/// [`Error::Stage`] so a caller can tell which pipeline stage aborted.
#[derive(Debug, Error)]
pub enum Error {
    #[error("model: {0}")]
    Model(String),
    #[error("synth: {0}")]
    Synth(String),
    #[error("dsp: {0}")]
    Dsp(String),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("randtest: {0}")]
    RandTest(String),
    #[error("config: {0}")]
    Config(String),
    #[error("format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Tag an error with the pipeline stage it occurred in.
    pub fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Extension for tagging results with the stage that produced them.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
