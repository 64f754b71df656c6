use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndc_search::bench::{self, BenchConfig, CorpusSpec, Pools};
use ndc_search::phonetic::DoubleMetaphone;
use ndc_search::query::DEFAULT_LIMIT;
use ndc_search::store::Durability;
use ndc_search::{Database, DbConfig, Query};
use ndc_server::ApiConfig;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "ndc", version, about = "Misspelling-tolerant citizen record search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP/JSON service.
    Serve(ServeArgs),
    /// Print the primary and alternate codes of each word.
    Encode {
        #[arg(required = true)]
        words: Vec<String>,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
    },
    /// Search a data directory and print the ranked table.
    Search {
        text: String,
        #[arg(long, env = "DATA_DIR", default_value = "data")]
        data_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_LIMIT)]
        limit: usize,
        #[arg(long, default_value_t = 0)]
        min_score: u8,
    },
    /// Append synthetic citizen records to a data directory.
    Generate {
        #[arg(long, env = "DATA_DIR", default_value = "data")]
        data_dir: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Compare indexed and linear search over growing synthetic corpora.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        queries: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 7)]
        repeats: usize,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Also write a gnuplot script plotting the CSV.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "BIND_ADDR", default_value = "127.0.0.1:8080")]
    bind_addr: SocketAddr,
    #[arg(long, env = "DATA_DIR", default_value = "data")]
    data_dir: PathBuf,
    #[arg(long, env = "API_TOKEN", hide_env_values = true)]
    api_token: Option<String>,
    #[arg(long, env = "DEFAULT_LIMIT", default_value_t = DEFAULT_LIMIT)]
    default_limit: usize,
    /// Require the bearer token on /search as well as on mutations.
    #[arg(long)]
    search_requires_auth: bool,
    /// Static UI assets served at /.
    #[arg(long, env = "UI_DIR")]
    ui_dir: Option<PathBuf>,
    /// Skip fsync after each write.
    #[arg(long)]
    no_fsync: bool,
}

type BoxError = Box<dyn std::error::Error + Send + Sync>;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(io::stderr)
        .init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<(), BoxError> {
    match command {
        Command::Serve(args) => serve(args),
        Command::Encode { words, max_len } => {
            let dm = DoubleMetaphone::new(max_len);
            let mut out = io::stdout().lock();
            for w in &words {
                for (word, codes) in dm.encode_text(w) {
                    writeln!(out, "{word}\t{}\t{}", codes.primary, codes.secondary)?;
                }
            }
            Ok(())
        }
        Command::Search {
            text,
            data_dir,
            limit,
            min_score,
        } => {
            let db = Database::open(DbConfig::on_disk(data_dir))?;
            let query = Query::new(text).with_limit(limit).with_min_score(min_score);
            if !query.has_terms() {
                return Err("query has no searchable terms".into());
            }
            let mut out = io::stdout().lock();
            writeln!(out, "{:>6}  {:>7}  {:>8}  Matched Info", "Serial", "Matched", "p_value")?;
            for (i, hit) in db.search(&query).hits.iter().enumerate() {
                writeln!(
                    out,
                    "{:>6}  {:>6}%  {:>8}  {}",
                    i + 1,
                    hit.score_percent,
                    hit.pointer.p_value,
                    hit.matched_record.fields.join(", ")
                )?;
            }
            Ok(())
        }
        Command::Generate {
            data_dir,
            count,
            seed,
        } => {
            let db = Database::open(DbConfig {
                durability: Durability::OsBuffered,
                ..DbConfig::on_disk(data_dir)
            })?;
            let pools = Pools::bangladesh();
            for row in bench::generate(&pools, CorpusSpec { record_count: count, seed })? {
                db.insert("citizen", row)?;
            }
            eprintln!("citizen table now holds {} records", db.len());
            Ok(())
        }
        Command::Bench {
            sizes,
            queries,
            seed,
            repeats,
            out,
            gnuplot,
        } => {
            let config = BenchConfig {
                sizes,
                queries,
                seed,
                repeats,
                ..BenchConfig::default()
            };
            let results = bench::run(&Pools::bangladesh(), &config)?;
            bench::write_csv(&results, BufWriter::new(File::create(&out)?))?;
            eprintln!(
                "{:>8} {:>12} {:>12} {:>12} {:>12}",
                "n", "indexed_us", "linear_us", "idx_cmp", "lin_cmp"
            );
            for r in &results {
                eprintln!(
                    "{:>8} {:>12.1} {:>12.1} {:>12.1} {:>12.1}",
                    r.n, r.indexed_mean_us, r.linear_mean_us, r.indexed_comparisons, r.linear_comparisons
                );
            }
            if let Some(script) = gnuplot {
                let png = out.with_extension("png");
                std::fs::write(
                    &script,
                    bench::gnuplot_script(&out.to_string_lossy(), &png.to_string_lossy()),
                )?;
            }
            Ok(())
        }
    }
}

fn serve(args: ServeArgs) -> Result<(), BoxError> {
    let config = ApiConfig {
        bind_addr: args.bind_addr,
        data_dir: args.data_dir,
        api_token: args.api_token.filter(|t| !t.is_empty()),
        default_limit: args.default_limit,
        search_requires_auth: args.search_requires_auth,
        ui_dir: args.ui_dir,
        durability: if args.no_fsync {
            Durability::OsBuffered
        } else {
            Durability::Fsync
        },
    };
    if config.api_token.is_none() {
        tracing::warn!("API_TOKEN unset; mutations are unauthenticated");
    }
    config
        .prepare_data_dir()
        .map_err(|e| format!("data dir {}: {e}", config.data_dir.display()))?;
    let addr = config.bind_addr;
    let app = ndc_server::app(config)?;

    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        tracing::info!(%addr, "listening");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
