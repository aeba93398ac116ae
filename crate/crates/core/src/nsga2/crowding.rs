/// Crowding distance of each member of one front.
///
/// For every objective the front is sorted (stably); the two boundary
/// members get `+inf` and interior members accumulate
/// `(next - previous) / (max - min)`. Zero-range objectives add nothing.
pub fn crowding_distance<V: AsRef<[f64]>>(front: &[V]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let k = front[0].as_ref().len();
    let mut distance = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for m in 0..k {
        order.sort_by(|&a, &b| front[a].as_ref()[m].total_cmp(&front[b].as_ref()[m]));
        let lo = front[order[0]].as_ref()[m];
        let hi = front[order[n - 1]].as_ref()[m];
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in order.windows(3) {
            let gap = front[w[2]].as_ref()[m] - front[w[0]].as_ref()[m];
            distance[w[1]] += gap / range;
        }
    }
    distance
}
