//! Seeded random-stream discipline.
//!
//! Every stochastic computation in this crate draws from a [`ChaCha12Rng`]
//! stream derived from `(master seed, label, task index)`. Labels separate
//! logical sub-experiments; task indices separate parallel shards of one
//! sub-experiment. Because the derivation is a pure hash, serial and parallel
//! executions of the same experiment consume identical streams per task and
//! therefore produce identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x00000100000001b3;

fn fnv1a64(bytes: &[u8], mut state: u64) -> u64 {
    for &b in bytes {
        state ^= u64::from(b);
        state = state.wrapping_mul(FNV_PRIME);
    }
    state
}

/// Collapse `(master seed, label, task index)` into a single 64-bit stream key
/// (FNV-1a over the concatenated fields).
pub fn stream_key(master_seed: u64, label: &str, task_index: u64) -> u64 {
    let mut h = fnv1a64(&master_seed.to_le_bytes(), FNV_OFFSET);
    h = fnv1a64(label.as_bytes(), h);
    fnv1a64(&task_index.to_le_bytes(), h)
}

/// Derive the ChaCha12 stream for one task of one labelled sub-experiment.
pub fn derive_stream(master_seed: u64, label: &str, task_index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(stream_key(master_seed, label, task_index))
}

/// Run `tasks` independent seeded jobs, optionally across `threads` OS
/// threads, and collect results in task order. Each job receives its own
/// derived stream, so the output is independent of `threads`.
pub fn run_seeded_tasks<T, F>(
    master_seed: u64,
    label: &str,
    tasks: u64,
    threads: usize,
    job: F,
) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha12Rng) -> T + Sync,
{
    let threads = threads.max(1);
    if threads == 1 || tasks <= 1 {
        return (0..tasks)
            .map(|i| {
                let mut rng = derive_stream(master_seed, label, i);
                job(i, &mut rng)
            })
            .collect();
    }
    let mut results: Vec<Option<T>> = (0..tasks).map(|_| None).collect();
    let chunk = tasks.div_ceil(threads as u64).max(1) as usize;
    std::thread::scope(|scope| {
        for (shard_id, shard) in results.chunks_mut(chunk).enumerate() {
            let job = &job;
            let base = shard_id as u64 * chunk as u64;
            scope.spawn(move || {
                for (offset, slot) in shard.iter_mut().enumerate() {
                    let i = base + offset as u64;
                    let mut rng = derive_stream(master_seed, label, i);
                    *slot = Some(job(i, &mut rng));
                }
            });
        }
    });
    results.into_iter().map(|r| r.expect("task completed")).collect()
}
