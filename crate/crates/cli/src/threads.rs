//! `SWEEPCERT_THREADS` caps the worker pool used for per-scenario work.

use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::PipelineError;

pub const THREADS_VAR: &str = "SWEEPCERT_THREADS";

/// Parse the variable's value; unset or empty means the rayon default.
pub fn parse_threads(value: Option<&str>) -> Result<Option<usize>, PipelineError> {
    let Some(raw) = value.map(str::trim).filter(|s| !s.is_empty()) else {
        return Ok(None);
    };
    match raw.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Some(n)),
        _ => Err(PipelineError::Options(format!(
            "{THREADS_VAR} must be a positive integer, got {raw:?}"
        ))),
    }
}

pub fn thread_pool(threads: Option<usize>) -> Result<ThreadPool, PipelineError> {
    let mut builder = ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| PipelineError::Options(format!("thread pool: {e}")))
}

/// Pool sized from the environment.
pub fn pool_from_env() -> Result<ThreadPool, PipelineError> {
    let value = std::env::var(THREADS_VAR).ok();
    thread_pool(parse_threads(value.as_deref())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_positive_counts() {
        assert_eq!(parse_threads(None).unwrap(), None);
        assert_eq!(parse_threads(Some("")).unwrap(), None);
        assert_eq!(parse_threads(Some(" 3 ")).unwrap(), Some(3));
        assert!(parse_threads(Some("0")).is_err());
        assert!(parse_threads(Some("many")).is_err());
    }

    #[test]
    fn pool_honours_the_cap() {
        let pool = thread_pool(Some(2)).unwrap();
        assert_eq!(pool.current_num_threads(), 2);
    }
}
