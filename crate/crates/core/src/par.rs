//! Optional data parallelism, capped by `TAILSAMPLER_THREADS`
//! (unset: rayon default, `0`: sequential).

use rayon::prelude::*;

pub const THREADS_ENV: &str = "TAILSAMPLER_THREADS";

fn configured_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok()
}

/// Map `f` over `items`, in parallel when allowed. Output order matches input
/// order either way.
pub fn map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    match configured_threads() {
        Some(0) => items.into_iter().map(f).collect(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| items.into_par_iter().map(&f).collect()),
            Err(_) => items.into_iter().map(f).collect(),
        },
        None => items.into_par_iter().map(f).collect(),
    }
}
