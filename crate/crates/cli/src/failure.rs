use std::fmt;

/// Exit status split used by every subcommand.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, files or configs: exit code 2.
    Input(String),
    /// The computation itself broke down: exit code 3.
    Numerical(String),
}

impl Failure {
    pub fn input(msg: impl Into<String>) -> Self {
        Failure::Input(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(msg) => write!(f, "invalid input: {msg}"),
            Failure::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl From<parity_hmm::Error> for Failure {
    fn from(e: parity_hmm::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

macro_rules! input_error {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Input(e.to_string())
            }
        }
    )*};
}

input_error!(std::io::Error, serde_json::Error, toml::de::Error, csv::Error);

pub type CliResult<T> = Result<T, Failure>;
