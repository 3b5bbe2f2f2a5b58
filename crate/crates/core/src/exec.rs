//! Execution policy for the data-parallel inner loops.
//!
//! Element, face and level loops go through [`map_indexed`]. With the
//! `parallel` feature enabled they run on the rayon pool unless the calling
//! thread has selected [`Policy::Sequential`]. Results are always collected in
//! index order and reduced sequentially by the caller, so floating point
//! output does not depend on the policy or thread count.

use std::cell::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    Sequential,
    Parallel,
}

thread_local! {
    static POLICY: Cell<Policy> = const { Cell::new(Policy::Parallel) };
}

pub fn policy() -> Policy {
    POLICY.with(|p| p.get())
}

/// Run `f` with the given policy on the current thread, restoring the
/// previous policy afterwards.
pub fn with_policy<R>(policy: Policy, f: impl FnOnce() -> R) -> R {
    let previous = POLICY.with(|p| p.replace(policy));
    struct Restore(Policy);
    impl Drop for Restore {
        fn drop(&mut self) {
            POLICY.with(|p| p.set(self.0));
        }
    }
    let _restore = Restore(previous);
    f()
}

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match policy() {
        Policy::Parallel if len > 1 => {
            let inner = Policy::Parallel;
            (0..len)
                .into_par_iter()
                .map(|i| with_policy(inner, || f(i)))
                .collect()
        }
        _ => (0..len).map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).map(f).collect()
}

/// Sum of `f(i)` over `0..len`, evaluated through [`map_indexed`] and
/// reduced in index order.
pub fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_indexed(len, f).into_iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree_bitwise() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let par = with_policy(Policy::Parallel, || sum_indexed(10_000, f));
        let seq = with_policy(Policy::Sequential, || sum_indexed(10_000, f));
        assert_eq!(par.to_bits(), seq.to_bits());
    }

    #[test]
    fn policy_is_restored() {
        with_policy(Policy::Sequential, || {
            assert_eq!(policy(), Policy::Sequential);
        });
        assert_eq!(policy(), Policy::Parallel);
    }
}
