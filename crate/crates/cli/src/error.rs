use fairprompt::ErrorClass;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    CapRefused(String),
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_BACKEND: u8 = 4;
pub const EXIT_CAP: u8 = 5;

fn class_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Config => EXIT_CONFIG,
        ErrorClass::Io => EXIT_IO,
        ErrorClass::Backend => EXIT_BACKEND,
        ErrorClass::CapRefused => EXIT_CAP,
    }
}

/// Exit code for the first classifiable error in the chain.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<fairprompt::Error>() {
            return class_code(e.class());
        }
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::Config(_) => EXIT_CONFIG,
                CliError::CapRefused(_) => EXIT_CAP,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return EXIT_IO;
        }
    }
    EXIT_CONFIG
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_follow_the_innermost_known_error() {
        let cap: anyhow::Error = fairprompt::Error::EnumerationCap { n: 8, cap: 6 }.into();
        assert_eq!(exit_code(&cap), EXIT_CAP);
        let wrapped = cap.context("while searching");
        assert_eq!(exit_code(&wrapped), EXIT_CAP);
        let io: anyhow::Error = std::io::Error::other("disk").into();
        assert_eq!(exit_code(&io), EXIT_IO);
        let miss: anyhow::Error = fairprompt::Error::CacheMiss { key: "k".into() }.into();
        assert_eq!(exit_code(&miss), EXIT_BACKEND);
        assert_eq!(exit_code(&CliError::Config("x".into()).into()), EXIT_CONFIG);
    }
}
