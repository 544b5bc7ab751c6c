//! Deterministic indexed parallelism.
//!
//! Work items are mapped by index and collected positionally, so the output
//! is identical for any worker count. Callers keep determinism by deriving
//! per-item randomness from stable keys rather than shared state.

/// Map `f` over `items`, using up to `workers` threads. Results come back in
/// input order.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    if workers <= 1 || items.len() <= 1 {
        return items
            .iter()
            .enumerate()
            .map(|(i, item)| f(i, item))
            .collect();
    }

    let workers = workers.min(items.len());
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots_ptr = std::sync::Mutex::new(&mut slots);

    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        for _ in 0..workers {
            let next = &next;
            let f = &f;
            handles.push(scope.spawn(move || {
                let mut local: Vec<(usize, R)> = Vec::new();
                loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= items.len() {
                        break;
                    }
                    local.push((i, f(i, &items[i])));
                }
                local
            }));
        }
        for handle in handles {
            let local = handle.join().expect("worker panicked");
            let mut slots = slots_ptr.lock().unwrap();
            for (i, value) in local {
                slots[i] = Some(value);
            }
        }
    });

    slots.into_iter().map(|s| s.expect("slot filled")).collect()
}
