//! Instance-level data parallelism with an order-preserving sequential
//! fallback. Without the `parallel` feature every mode runs sequentially.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Maps `f` over `items`, returning results in input order.
pub fn map_ordered<T, U, F>(exec: Execution, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
        }
        _ => items.iter().enumerate().map(|(i, t)| f(i, t)).collect(),
    }
}

/// Like [`map_ordered`] for fallible work; the first error by input order
/// wins.
pub fn try_map_ordered<T, U, E, F>(exec: Execution, items: &[T], f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(usize, &T) -> Result<U, E> + Sync + Send,
{
    map_ordered(exec, items, f).into_iter().collect()
}

/// Sizes the global worker pool. `0` keeps the default (one per core).
/// Only the first call can take effect.
pub fn configure_threads(jobs: usize) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    if jobs > 0 {
        return rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| e.to_string());
    }
    let _ = jobs;
    Ok(())
}

/// Parallel unless one job was requested.
pub fn execution_for_jobs(jobs: usize) -> Execution {
    if jobs == 1 {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = map_ordered(Execution::Sequential, &xs, |i, x| (i as u64) * x);
        let par = map_ordered(Execution::Parallel, &xs, |i, x| (i as u64) * x);
        assert_eq!(seq, par);
        let err: Result<Vec<u64>, usize> =
            try_map_ordered(
                Execution::Parallel,
                &xs,
                |i, x| if i % 300 == 299 { Err(i) } else { Ok(*x) },
            );
        assert_eq!(err, Err(299));
    }
}
