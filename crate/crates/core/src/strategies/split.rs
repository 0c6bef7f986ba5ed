//! Index-parity split of a numbering and its inverse.

/// `(ν(0), ν(2), …)` and `(ν(1), ν(3), …)`.
pub fn split_numbering<T: Clone>(nu: &[T]) -> (Vec<T>, Vec<T>) {
    let even = nu.iter().step_by(2).cloned().collect();
    let odd = nu.iter().skip(1).step_by(2).cloned().collect();
    (even, odd)
}

/// Inverse of [`split_numbering`]. `even` may be one longer than `odd`.
pub fn interleave<T: Clone>(even: &[T], odd: &[T]) -> Vec<T> {
    assert!(
        even.len() == odd.len() || even.len() == odd.len() + 1,
        "parts of lengths {} and {} do not come from one numbering",
        even.len(),
        odd.len()
    );
    let mut out = Vec::with_capacity(even.len() + odd.len());
    for (i, e) in even.iter().enumerate() {
        out.push(e.clone());
        if let Some(o) = odd.get(i) {
            out.push(o.clone());
        }
    }
    out
}
