//! Single-writer sharded builds and chunked parallel queries.
//!
//! A build runs one dispatcher and one worker per shard. The dispatcher
//! routes every key with the shard hash and appends it to that shard's
//! bounded FIFO; each worker is the only writer of its sub-array and drains
//! its FIFO in order. Since shards are disjoint and each sees its keys in
//! stream order, the result is bit-identical to a sequential build.

use std::io;
use std::sync::mpsc::{sync_channel, SyncSender};
use std::thread;

use crate::filters::{Filter, FilterConfig, FilterHashes, Probe};
use crate::hashing::HashSpec;
use crate::Result;

/// Default per-shard FIFO capacity in keys.
pub const DEFAULT_QUEUE_KEYS: usize = 1 << 16;
/// Keys per message between dispatcher and workers.
pub const DEFAULT_BATCH_KEYS: usize = 1024;

/// How the bit array is divided among writers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShardPlan {
    pub shards: u32,
    pub blocks_per_shard: u64,
    pub router: HashSpec,
    pub queue_capacity: usize,
}

impl ShardPlan {
    pub fn of(filter: &Filter) -> Self {
        let layout = filter.layout();
        Self {
            shards: layout.shards,
            blocks_per_shard: layout.blocks_per_shard(),
            router: filter.hashes().shard_hash(),
            queue_capacity: DEFAULT_QUEUE_KEYS,
        }
    }

    #[inline]
    pub fn route(&self, x: u64) -> usize {
        self.router.eval(x) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    /// 0 builds sequentially in the calling thread; any other value runs one
    /// worker per shard.
    pub threads: usize,
    /// Per-shard FIFO capacity in keys. The dispatcher blocks when full.
    pub queue_capacity: usize,
    pub batch_size: usize,
    /// Read the key stream in its own thread, separate from the dispatcher.
    pub reader_thread: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            threads: 0,
            queue_capacity: DEFAULT_QUEUE_KEYS,
            batch_size: DEFAULT_BATCH_KEYS,
            reader_thread: false,
        }
    }
}

impl BuildOptions {
    pub fn sequential() -> Self {
        Self::default()
    }

    pub fn parallel(threads: usize) -> Self {
        Self {
            threads: threads.max(1),
            ..Self::default()
        }
    }
}

/// Creates a filter and inserts every key of the stream.
pub fn build_sharded<I>(config: FilterConfig, keys: I, options: BuildOptions) -> Result<Filter>
where
    I: IntoIterator<Item = io::Result<u64>>,
    I::IntoIter: Send,
{
    let mut filter = Filter::new(config)?;
    insert_sharded(&mut filter, keys, options)?;
    Ok(filter)
}

/// Inserts a key stream into an existing filter. Returns the number of keys
/// read. On a stream error, keys dispatched before it remain inserted.
pub fn insert_sharded<I>(filter: &mut Filter, keys: I, options: BuildOptions) -> Result<u64>
where
    I: IntoIterator<Item = io::Result<u64>>,
    I::IntoIter: Send,
{
    if options.threads == 0 {
        let mut count = 0;
        let mut result = Ok(());
        filter.insert_all(keys.into_iter().map_while(|k| match k {
            Ok(x) => {
                count += 1;
                Some(x)
            }
            Err(e) => {
                result = Err(e);
                None
            }
        }));
        result?;
        return Ok(count);
    }

    let batch = options.batch_size.max(1);
    let depth = (options.queue_capacity / batch).max(1);
    let (hashes, shards, inserted) = filter.parts_mut();
    let mut dispatched = 0u64;
    let outcome = thread::scope(|scope| -> Result<()> {
        let mut senders = Vec::with_capacity(shards.len());
        for (id, shard) in shards.iter_mut().enumerate() {
            let (tx, rx) = sync_channel::<Vec<u64>>(depth);
            senders.push(tx);
            scope.spawn(move || {
                let mut probe = Probe::default();
                for keys in rx {
                    for x in keys {
                        debug_assert_eq!(hashes.route(x), id, "key routed to the wrong writer");
                        hashes.insert_key(shard, x, &mut probe);
                    }
                }
            });
        }
        let mut dispatcher = Dispatcher::new(hashes, senders, batch);
        let keys = keys.into_iter();
        if options.reader_thread {
            let (tx, rx) = sync_channel::<io::Result<Vec<u64>>>(depth);
            scope.spawn(move || read_batches(keys, batch, tx));
            for chunk in rx {
                for x in chunk? {
                    dispatcher.push(x);
                }
            }
        } else {
            for key in keys {
                dispatcher.push(key?);
            }
        }
        dispatched = dispatcher.finish();
        Ok(())
    });
    *inserted += dispatched;
    outcome.map(|()| dispatched)
}

fn read_batches<I>(keys: I, batch: usize, tx: SyncSender<io::Result<Vec<u64>>>)
where
    I: Iterator<Item = io::Result<u64>>,
{
    let mut buf = Vec::with_capacity(batch);
    for key in keys {
        match key {
            Ok(x) => {
                buf.push(x);
                if buf.len() == batch {
                    let full = std::mem::replace(&mut buf, Vec::with_capacity(batch));
                    if tx.send(Ok(full)).is_err() {
                        return;
                    }
                }
            }
            Err(e) => {
                let _ = tx.send(Ok(buf));
                let _ = tx.send(Err(e));
                return;
            }
        }
    }
    if !buf.is_empty() {
        let _ = tx.send(Ok(buf));
    }
}

struct Dispatcher<'a> {
    hashes: &'a FilterHashes,
    senders: Vec<SyncSender<Vec<u64>>>,
    pending: Vec<Vec<u64>>,
    batch: usize,
    count: u64,
}

impl<'a> Dispatcher<'a> {
    fn new(hashes: &'a FilterHashes, senders: Vec<SyncSender<Vec<u64>>>, batch: usize) -> Self {
        let pending = senders.iter().map(|_| Vec::with_capacity(batch)).collect();
        Self {
            hashes,
            senders,
            pending,
            batch,
            count: 0,
        }
    }

    #[inline]
    fn push(&mut self, x: u64) {
        let shard = self.hashes.route(x);
        self.count += 1;
        let buf = &mut self.pending[shard];
        buf.push(x);
        if buf.len() == self.batch {
            let full = std::mem::replace(buf, Vec::with_capacity(self.batch));
            self.senders[shard]
                .send(full)
                .expect("shard worker exited early");
        }
    }

    /// Flushes partial batches and closes the queues.
    fn finish(mut self) -> u64 {
        for (tx, buf) in self.senders.iter().zip(self.pending.drain(..)) {
            if !buf.is_empty() {
                tx.send(buf).expect("shard worker exited early");
            }
        }
        self.count
    }
}

/// Looks up `keys`, splitting them into contiguous chunks across `threads`
/// readers (0 or 1 queries in the calling thread).
pub fn lookup_chunked(filter: &Filter, keys: &[u64], threads: usize) -> Vec<bool> {
    let mut answers = vec![false; keys.len()];
    if threads <= 1 || keys.len() < 2 {
        for (a, &x) in answers.iter_mut().zip(keys) {
            *a = filter.lookup(x);
        }
        return answers;
    }
    let chunk = keys.len().div_ceil(threads);
    thread::scope(|scope| {
        for (out, part) in answers.chunks_mut(chunk).zip(keys.chunks(chunk)) {
            scope.spawn(move || {
                for (a, &x) in out.iter_mut().zip(part) {
                    *a = filter.lookup(x);
                }
            });
        }
    });
    answers
}
