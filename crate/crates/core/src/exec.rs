//! Trial sharding for property campaigns. With the `parallel` feature
//! (default) trials fan out over rayon; without it everything runs
//! sequentially. Results come back in trial order either way, so campaign
//! reports are deterministic.

/// Run `f` for each trial index and collect the results in order.
#[cfg(feature = "parallel")]
pub fn map_trials<T, F>(trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..trials).into_par_iter().map(f).collect()
}

/// Run `f` for each trial index and collect the results in order.
#[cfg(not(feature = "parallel"))]
pub fn map_trials<T, F>(trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_trials_seq(trials, f)
}

/// Sequential reference path, always available; the bench suite compares it
/// against [`map_trials`].
pub fn map_trials_seq<T, F>(trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..trials).map(f).collect()
}
