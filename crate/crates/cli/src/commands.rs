use std::f64::consts::LN_2;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::time::Instant;

use blowchoc::analysis::{
    block_load_histogram, estimate_fpr, estimate_fpr_keys, max_allowed_load, measure_fpr,
};
use blowchoc::filters::{overload_fpr, size_for, GOLDEN_RATIO};
use blowchoc::format::{read_filter, write_filter, FilterFileHeader, HEADER_LEN};
use blowchoc::hashing::collision_probability;
use blowchoc::input::{read_keys, KeyStream};
use blowchoc::keygen::NegativeKeys;
use blowchoc::sharding::{insert_sharded, lookup_chunked, BuildOptions};
use blowchoc::{
    BitStrategy, CostModel, Filter, FilterConfig, FilterKind, FprEstimate, KeyFormat, QGramEncoder,
};

use crate::args::{
    BoundsArgs, BuildArgs, CostArg, FilterArgs, FormatArg, FprArgs, HistArgs, KeyArgs, KindArg,
    QueryArgs, StrategyArg, SweepArgs,
};
use crate::{CliError, CliResult};

const QUERY_CHUNK: usize = 1 << 16;

fn filter_config(f: &FilterArgs, capacity: u64, size_bits: Option<u64>) -> CliResult<FilterConfig> {
    let kind = match f.kind {
        KindArg::Standard => FilterKind::Standard,
        KindArg::Blocked => FilterKind::Blocked,
        KindArg::Blowchoc => FilterKind::BlowChoc,
    };
    if kind == FilterKind::Standard && f.choices.is_some() {
        return Err(CliError::Usage(
            "--choices does not apply to standard filters".into(),
        ));
    }
    let cost = match f.cost {
        CostArg::Exp => CostModel::exp(f.cost_param.unwrap_or(GOLDEN_RATIO)),
        CostArg::Mix => CostModel::mix(f.cost_param.unwrap_or(1.0)),
        CostArg::La => CostModel::lookahead(f.cost_param.unwrap_or(3.5)),
    };
    let strategy = match f.strategy {
        StrategyArg::Random => BitStrategy::Random,
        StrategyArg::Distinct => BitStrategy::Distinct,
    };
    let mut config = FilterConfig::new(kind, capacity, f.k)
        .with_cost(cost)
        .with_strategy(strategy)
        .with_relative_size(f.relative_size)
        .with_block_bits(f.block_bits)
        .with_shards(f.shards.unwrap_or(f.threads.max(1) as u32))
        .with_seed(f.seed);
    if let Some(c) = f.choices {
        config = config.with_choices(c);
    }
    if let Some(bits) = size_bits {
        config = config.with_size_bits(bits);
    }
    config.validate()?;
    Ok(config)
}

fn build_options(threads: usize) -> BuildOptions {
    if threads == 0 {
        BuildOptions::sequential()
    } else {
        BuildOptions::parallel(threads)
    }
}

fn io_context(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn open_input(path: &Path) -> CliResult<Box<dyn Read + Send>> {
    if path == Path::new("-") {
        Ok(Box::new(io::stdin()))
    } else {
        Ok(Box::new(File::open(path).map_err(|e| io_context(path, e))?))
    }
}

fn key_stream(
    path: &Path,
    format: FormatArg,
    q: Option<u32>,
    no_canonical: bool,
) -> CliResult<KeyStream> {
    let format = match format {
        FormatArg::U64le => KeyFormat::U64Le,
        FormatArg::Text => KeyFormat::Text,
        FormatArg::Fasta => KeyFormat::Fasta,
    };
    let encoder = match (format, q) {
        (KeyFormat::Fasta, None) => return Err(CliError::Usage("--format fasta needs --q".into())),
        (KeyFormat::Fasta, Some(q)) => Some(QGramEncoder::new(q, !no_canonical)?),
        (_, Some(_)) => return Err(CliError::Usage("--q only applies to --format fasta".into())),
        (_, None) => None,
    };
    Ok(read_keys(open_input(path)?, format, encoder)?)
}

fn open_keys(k: &KeyArgs) -> CliResult<KeyStream> {
    key_stream(&k.keys, k.format, k.q, k.no_canonical)
}

/// Reads a filter file, checking its length against the header before
/// allocating the bit array.
fn load_filter(path: &Path) -> CliResult<Filter> {
    let mut file = File::open(path).map_err(|e| io_context(path, e))?;
    let len = file.metadata().map_err(|e| io_context(path, e))?.len();
    let mut head = [0u8; HEADER_LEN];
    if len < HEADER_LEN as u64 {
        return Err(CliError::Corrupt(format!(
            "{}: truncated header",
            path.display()
        )));
    }
    file.read_exact(&mut head)
        .map_err(|e| io_context(path, e))?;
    let layout = FilterFileHeader::decode(&head)
        .and_then(|h| h.config())
        .and_then(|c| c.layout())
        .map_err(|e| CliError::Corrupt(format!("{}: {e}", path.display())))?;
    let expected = HEADER_LEN as u64 + layout.total_bits().div_ceil(64) * 8;
    if len != expected {
        return Err(CliError::Corrupt(format!(
            "{}: file has {len} bytes, header implies {expected}",
            path.display()
        )));
    }
    file.seek(SeekFrom::Start(0))
        .map_err(|e| io_context(path, e))?;
    read_filter(BufReader::with_capacity(1 << 20, file)).map_err(|e| match e {
        blowchoc::Error::Io(e) => io_context(path, e),
        e => CliError::Corrupt(format!("{}: {e}", path.display())),
    })
}

fn kind_name(kind: FilterKind) -> &'static str {
    match kind {
        FilterKind::Standard => "standard",
        FilterKind::Blocked => "blocked",
        FilterKind::BlowChoc => "blowchoc",
    }
}

fn strategy_name(strategy: BitStrategy) -> &'static str {
    match strategy {
        BitStrategy::Random => "random",
        BitStrategy::Distinct => "distinct",
    }
}

const FPR_HEADER: &str = "kind\tk\tc\tstrategy\trel_size\tN\tW\tfpr\tlog2_fpr\tstderr";

fn fpr_row(config: &FilterConfig, rel_size: Option<f64>, est: &FprEstimate) -> String {
    let rel = rel_size.map_or("NA".to_string(), |r| format!("{r}"));
    let log2 = est
        .log2_fpr()
        .map_or("NA".to_string(), |l| format!("{l:.4}"));
    format!(
        "{}\t{}\t{}\t{}\t{rel}\t{}\t{}\t{:.6e}\t{log2}\t{:.3e}",
        kind_name(config.kind),
        config.k,
        config.effective_choices(),
        strategy_name(config.strategy),
        est.queries,
        est.false_positives,
        est.fpr(),
        est.stderr(),
    )
}

pub fn build(a: BuildArgs) -> CliResult<()> {
    let config = filter_config(&a.filter, a.n.unwrap_or(0), a.size_bits)?;
    let mut filter = Filter::new(config)?;
    let keys = open_keys(&a.keys)?;
    let start = Instant::now();
    let read =
        insert_sharded(&mut filter, keys, build_options(a.filter.threads)).map_err(
            |e| match e {
                blowchoc::Error::Io(e) => io_context(&a.keys.keys, e),
                e => e.into(),
            },
        )?;
    let elapsed = start.elapsed().as_secs_f64();
    let file = File::create(&a.out).map_err(|e| io_context(&a.out, e))?;
    write_filter(&filter, BufWriter::with_capacity(1 << 20, file))
        .map_err(|e| io_context(&a.out, e))?;
    let mut err = io::stderr().lock();
    writeln!(err, "keys\tbits\tload\tseconds")?;
    writeln!(
        err,
        "{read}\t{}\t{:.6}\t{elapsed:.3}",
        filter.total_bits(),
        filter.load()
    )?;
    Ok(())
}

pub fn query(a: QueryArgs) -> CliResult<()> {
    let filter = load_filter(&a.filter)?;
    let keys = open_keys(&a.keys)?;
    let mut out = BufWriter::new(io::stdout().lock());
    let mut chunk = Vec::with_capacity(QUERY_CHUNK);
    let flush = |chunk: &mut Vec<u64>, out: &mut BufWriter<_>| -> io::Result<()> {
        let answers = lookup_chunked(&filter, chunk, a.threads);
        for (key, hit) in chunk.iter().zip(answers) {
            writeln!(out, "{key}\t{}", u8::from(hit))?;
        }
        chunk.clear();
        Ok(())
    };
    for key in keys {
        chunk.push(key.map_err(|e| io_context(&a.keys.keys, e))?);
        if chunk.len() == QUERY_CHUNK {
            flush(&mut chunk, &mut out)?;
        }
    }
    flush(&mut chunk, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn fpr(a: FprArgs) -> CliResult<()> {
    let filter = load_filter(&a.filter)?;
    let est = match &a.negatives {
        Some(path) => {
            let keys = key_stream(path, a.format, a.q, a.no_canonical)?
                .collect::<io::Result<Vec<u64>>>()
                .map_err(|e| io_context(path, e))?;
            estimate_fpr_keys(&filter, &keys, a.threads)?
        }
        None => estimate_fpr(
            &filter,
            &NegativeKeys::new(a.negative_seed),
            a.queries,
            a.threads,
        )?,
    };
    let config = filter.config();
    let rel_size = (filter.inserted() > 0).then(|| {
        filter.total_bits() as f64 / (filter.inserted() as f64 * f64::from(config.k) / LN_2)
    });
    let mut out = io::stdout().lock();
    writeln!(out, "{FPR_HEADER}")?;
    writeln!(
        out,
        "{}",
        fpr_row(config, rel_size.map(|r| (r * 1e4).round() / 1e4), &est)
    )?;
    Ok(())
}

pub fn hist(a: HistArgs) -> CliResult<()> {
    let filter = load_filter(&a.filter)?;
    let hist = block_load_histogram(&filter);
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "j\tcount")?;
    for (j, count) in hist.counts.iter().enumerate() {
        writeln!(out, "{j}\t{count}")?;
    }
    out.flush()?;
    let mut err = io::stderr().lock();
    writeln!(err, "blocks\tmean_load\tvariance")?;
    writeln!(
        err,
        "{}\t{:.4}\t{:.4}",
        hist.blocks(),
        hist.mean_load(),
        hist.variance()
    )?;
    Ok(())
}

pub fn sweep(a: SweepArgs) -> CliResult<()> {
    let template = filter_config(&a.filter, a.n, None)?;
    let grid = a
        .rel_sizes
        .clone()
        .unwrap_or_else(|| (0..=14).map(|i| f64::from(80 + 5 * i) / 100.0).collect());
    let mut out = io::stdout().lock();
    writeln!(out, "{FPR_HEADER}")?;
    for (i, &rel) in grid.iter().enumerate() {
        let seed = a
            .filter
            .seed
            .wrapping_add((i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let est = measure_fpr(&template, a.n, rel, a.queries, seed, a.filter.threads)?;
        writeln!(out, "{}", fpr_row(&template, Some(rel), &est))?;
        out.flush()?;
    }
    Ok(())
}

pub fn bounds(a: BoundsArgs) -> CliResult<()> {
    let mut out = io::stdout().lock();
    if a.max_load {
        let ks: Vec<u32> = a.k.map_or_else(|| (2..=24).collect(), |k| vec![k]);
        let cs: Vec<u32> = a.choices.map_or_else(|| vec![1, 2, 3], |c| vec![c]);
        writeln!(out, "k\tc\tB\tmax_load")?;
        for &k in &ks {
            for &c in &cs {
                let load = max_allowed_load(k, c, a.block_bits)?;
                writeln!(out, "{k}\t{c}\t{}\t{load}", a.block_bits)?;
            }
        }
    } else if a.overload {
        let gammas: Vec<f64> = a.gamma.map_or_else(
            || (5..=20).map(|i| f64::from(i) / 10.0).collect(),
            |g| vec![g],
        );
        let k = a.k.unwrap_or(10);
        if k == 0 || gammas.iter().any(|&g| !(g >= 0.0 && g.is_finite())) {
            return Err(CliError::Usage(
                "--overload needs k >= 1 and a finite gamma >= 0".into(),
            ));
        }
        writeln!(out, "gamma\tk\tfpr\tratio")?;
        for g in gammas {
            let fpr = overload_fpr(g, k);
            let ratio = fpr * 2f64.powi(k as i32);
            writeln!(out, "{g}\t{k}\t{fpr:.3e}\t{ratio:.3}")?;
        }
    } else if a.collision {
        let ks: Vec<u32> = a.k.map_or_else(|| (1..=24).collect(), |k| vec![k]);
        writeln!(out, "k\tB\tprobability")?;
        for k in ks {
            let p = collision_probability(k, a.block_bits)?;
            writeln!(out, "{k}\t{}\t{p:.6e}", a.block_bits)?;
        }
    } else {
        let (Some(n), Some(k)) = (a.n, a.k) else {
            return Err(CliError::Usage("--size needs --n and --k".into()));
        };
        let layout = size_for(n, k, a.relative_size, a.block_bits, a.shards)?;
        writeln!(out, "n\tk\trel_size\tB\tM\tT\tm")?;
        writeln!(
            out,
            "{n}\t{k}\t{}\t{}\t{}\t{}\t{}",
            a.relative_size,
            layout.block_bits,
            layout.num_blocks,
            layout.shards,
            layout.total_bits()
        )?;
    }
    Ok(())
}
