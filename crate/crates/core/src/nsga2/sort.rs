use super::dominance::dominates_unchecked;

/// Deb's fast non-dominated sort. Returns fronts of indices into
/// `vectors`, best front first, each front in ascending index order.
pub fn fast_nondominated_sort<V: AsRef<[f64]>>(vectors: &[V]) -> Vec<Vec<usize>> {
    let n = vectors.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (vectors[i].as_ref(), vectors[j].as_ref());
            if dominates_unchecked(a, b) {
                dominated_by[i].push(j);
                domination_count[j] += 1;
            } else if dominates_unchecked(b, a) {
                dominated_by[j].push(i);
                domination_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}
