use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use bookrec_core::corpus::{
    build_book, read_catalog, read_ratings, write_catalog, write_ratings, Catalog, RatingEntry, StopwordList,
};
use bookrec_core::evaluation::{
    ablation_csv, build_dataset, curve_csv, format_ablation_table, format_curve_table, run_evaluation, EvalConfig,
    EvalOptions, TrainSize, DEFAULT_POINTS,
};
use bookrec_core::extraction::{extract_record, filter_adequate, load_documents, read_records, write_records, ExtractionRuleSet};
use bookrec_core::learner::{Profile, DEFAULT_LAMBDA};
use bookrec_core::recommender::{
    explain_by_id, explain_feature, format_explanation, format_feature, format_profile_features, format_ranked, rank,
    RankedList,
    DEFAULT_EXPLANATION_ROWS, DEFAULT_FEATURE_ROWS,
};
use bookrec_core::slot::{Slot, SlotMask};
use bookrec_core::synthetic::{PlantedConfig, PlantedCorpus};
use bookrec_service::{ServiceConfig, Session};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bookrec", version, about = "Content-based book recommender")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract slot fillers from catalog pages.
    Extract(ExtractArgs),
    /// Build or search a tokenized catalog.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Learn a profile from rated books.
    Train(TrainArgs),
    /// Rank unrated books and explain the ranking.
    Recommend(RecommendArgs),
    /// Cross-validated learning curves, optionally with a slot ablation.
    Eval(EvalArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Write a synthetic catalog with planted preferences.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Extraction rule file.
    #[arg(long)]
    rules: PathBuf,
    /// A directory with one page per file, or one file of `%%%<id>`-separated pages.
    #[arg(long)]
    input: PathBuf,
    /// Output records (JSON lines).
    #[arg(long)]
    out: PathBuf,
    /// Keep titles with no synopsis, review or comment.
    #[arg(long)]
    keep_inadequate: bool,
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Tokenize extracted records into a catalog.
    Build {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Stopword file, one word per line; defaults to the built-in list.
        #[arg(long)]
        stopwords: Option<PathBuf>,
    },
    /// Find books by title or author words.
    Search {
        #[arg(long)]
        catalog: PathBuf,
        query: String,
    },
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Additive smoothing strength.
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// Slots to use, comma separated; defaults to all six.
    #[arg(long)]
    slots: Option<String>,
}

impl ModelArgs {
    fn mask(&self) -> Result<SlotMask> {
        Ok(match &self.slots {
            Some(list) => SlotMask::parse_list(list)?,
            None => SlotMask::all(),
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long)]
    ratings: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Also print the strongest features of the profile.
    #[arg(long, value_name = "N")]
    show_features: Option<usize>,
}

#[derive(Args)]
struct RecommendArgs {
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    catalog: PathBuf,
    /// Rated books; excluded from the ranking and needed by --explain-feature.
    #[arg(long)]
    ratings: Option<PathBuf>,
    #[arg(short = 'n', long, default_value_t = 10)]
    n: usize,
    /// Also list the N lowest-ranked books.
    #[arg(long, value_name = "N")]
    bottom: Option<usize>,
    /// Explain the score of one book instead of ranking.
    #[arg(long, value_name = "ID")]
    explain: Option<String>,
    /// List the rated books behind one feature, as `slot:token`.
    #[arg(long, value_name = "SLOT:TOKEN")]
    explain_feature: Option<String>,
    /// Rows in an explanation table.
    #[arg(long)]
    rows: Option<usize>,
    /// Logarithm base for displayed strengths: `e`, `2`, `10` or any base > 0.
    #[arg(long, default_value = "e")]
    log_base: String,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long)]
    ratings: PathBuf,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training-set sizes, e.g. `5,10,20,40,100,full`.
    #[arg(long, default_value = DEFAULT_POINTS)]
    points: String,
    /// Slots to remove in a paired comparison, e.g. `related-authors,related-titles`.
    #[arg(long)]
    ablate: Option<String>,
    #[command(flatten)]
    model: ModelArgs,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Learning-curve CSV path (with --ablate, the comparison CSV).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "BOOKREC_CATALOG")]
    catalog: PathBuf,
    /// Where ratings and the trained profile are kept.
    #[arg(long, env = "BOOKREC_DATA_DIR")]
    data_dir: PathBuf,
    #[arg(long, env = "BOOKREC_HOST", default_value = "127.0.0.1")]
    host: IpAddr,
    #[arg(long, env = "BOOKREC_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "BOOKREC_LAMBDA", default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, env = "BOOKREC_SLOTS")]
    slots: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory for catalog.jsonl and ratings.jsonl.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1000)]
    books: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Slot that receives the positive markers.
    #[arg(long, default_value = "words")]
    marker_slot: Slot,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Extract(args) => extract(args),
        Command::Corpus(CorpusCommand::Build { records, out, stopwords }) => corpus_build(&records, &out, stopwords),
        Command::Corpus(CorpusCommand::Search { catalog, query }) => corpus_search(&catalog, &query),
        Command::Train(args) => train(args),
        Command::Recommend(args) => recommend(args),
        Command::Eval(args) => eval(args),
        Command::Serve(args) => serve(args),
        Command::Synth(args) => synth(args),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn load_catalog(path: &Path) -> Result<Catalog> {
    read_catalog(open(path)?).with_context(|| format!("reading catalog {}", path.display()))
}

fn load_ratings(path: &Path) -> Result<Vec<RatingEntry>> {
    read_ratings(open(path)?).with_context(|| format!("reading ratings {}", path.display()))
}

fn extract(args: ExtractArgs) -> Result<()> {
    let rules = ExtractionRuleSet::load(&args.rules).with_context(|| format!("reading rules {}", args.rules.display()))?;
    let docs = load_documents(&args.input).with_context(|| format!("reading pages {}", args.input.display()))?;
    let records: Vec<_> = docs.iter().map(|d| extract_record(&d.text, &d.id, &rules)).collect();
    let total = records.len();
    let records = if args.keep_inadequate { records } else { filter_adequate(records) };
    let mut out = create(&args.out)?;
    write_records(&mut out, &records)?;
    out.flush()?;
    eprintln!("extracted {} of {total} pages into {}", records.len(), args.out.display());
    Ok(())
}

fn corpus_build(records: &Path, out: &Path, stopwords: Option<PathBuf>) -> Result<()> {
    let stop = match stopwords {
        Some(path) => StopwordList::load(&path).with_context(|| format!("reading stopwords {}", path.display()))?,
        None => StopwordList::english(),
    };
    let records = read_records(open(records)?)?;
    let books: Vec<_> = records.iter().map(|r| build_book(r, &stop)).collect();
    let catalog = Catalog::new(books)?;
    let mut file = create(out)?;
    write_catalog(&mut file, catalog.books())?;
    file.flush()?;
    eprintln!("wrote {} books to {}", catalog.len(), out.display());
    Ok(())
}

fn corpus_search(catalog: &Path, query: &str) -> Result<()> {
    let catalog = load_catalog(catalog)?;
    for book in catalog.search(query) {
        println!("{}\t{}", book.id, book.title_display);
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let catalog = load_catalog(&args.catalog)?;
    let ratings = load_ratings(&args.ratings)?;
    let data = build_dataset(&catalog, &ratings)?;
    let profile = Profile::train(&data, args.model.lambda, &args.model.mask()?)?;
    let mut out = create(&args.out)?;
    serde_json::to_writer(&mut out, &profile)?;
    out.flush()?;
    eprintln!("trained on {} rated books; profile written to {}", data.len(), args.out.display());
    if let Some(n) = args.show_features {
        print!("{}", format_profile_features(&profile, n, std::f64::consts::E));
    }
    Ok(())
}

fn parse_log_base(s: &str) -> Result<f64> {
    let base = match s {
        "e" => std::f64::consts::E,
        other => other.parse().with_context(|| format!("bad log base `{other}`"))?,
    };
    if !(base > 0.0 && base != 1.0 && base.is_finite()) {
        bail!("log base must be positive and not 1, got {s}");
    }
    Ok(base)
}

fn recommend(args: RecommendArgs) -> Result<()> {
    let base = parse_log_base(&args.log_base)?;
    let profile: Profile = serde_json::from_reader(open(&args.profile)?)
        .with_context(|| format!("reading profile {}", args.profile.display()))?;
    let catalog = load_catalog(&args.catalog)?;
    let ratings = args.ratings.as_deref().map(load_ratings).transpose()?.unwrap_or_default();

    if let Some(id) = &args.explain {
        let exp = explain_by_id(&profile, &catalog, id, args.rows.unwrap_or(DEFAULT_EXPLANATION_ROWS))?;
        print!("{}", format_explanation(&exp, base));
        return Ok(());
    }
    if let Some(feature) = &args.explain_feature {
        let (slot, token) = feature.split_once(':').context("--explain-feature expects `slot:token`")?;
        if args.ratings.is_none() {
            bail!("--explain-feature needs --ratings to find the rated books");
        }
        let data = build_dataset(&catalog, &ratings)?;
        let exp = explain_feature(&profile, &data, slot.parse()?, token, args.rows.unwrap_or(DEFAULT_FEATURE_ROWS))?;
        print!("{}", format_feature(&exp));
        return Ok(());
    }

    let rated: HashSet<String> = ratings.into_iter().map(|r| r.id).collect();
    let ranked = rank(&profile, &catalog, &rated);
    print!("{}", format_ranked(&ranked.top(args.n), 1));
    if let Some(n) = args.bottom {
        let start = ranked.len().saturating_sub(n);
        let tail = RankedList { entries: ranked.entries[start..].to_vec() };
        println!("\nLowest ranked:");
        print!("{}", format_ranked(&tail, start + 1));
    }
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let catalog = load_catalog(&args.catalog)?;
    let ratings = load_ratings(&args.ratings)?;
    let data = build_dataset(&catalog, &ratings)?;
    let ablate = args
        .ablate
        .as_deref()
        .map(|list| Ok::<_, anyhow::Error>(SlotMask::parse_list(list)?.iter().collect::<Vec<Slot>>()))
        .transpose()?;
    let options = EvalOptions {
        folds: args.folds,
        seed: args.seed,
        points: TrainSize::parse_list(&args.points)?,
        config: EvalConfig { lambda: args.model.lambda, mask: args.model.mask()? },
        ablate,
    };
    let report = run_evaluation(&data, &options)?;

    print!("{}", format_curve_table(&report.curve));
    if let Some(ablation) = &report.ablation {
        println!("\nFull model against the model without {}:", SlotMask::from_iter(ablation.removed.iter().copied()));
        print!("{}", format_ablation_table(ablation));
    }
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    if let Some(path) = &args.out {
        let mut out = create(path)?;
        serde_json::to_writer_pretty(&mut out, &report)?;
        out.flush()?;
    }
    if let Some(path) = &args.csv {
        let text = match &report.ablation {
            Some(ablation) => ablation_csv(ablation),
            None => curve_csv(&report.curve),
        };
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<()> {
    let catalog = load_catalog(&args.catalog)?;
    let mask = match &args.slots {
        Some(list) => SlotMask::parse_list(list)?,
        None => SlotMask::all(),
    };
    let config = ServiceConfig { data_dir: args.data_dir, lambda: args.lambda, mask };
    let session = Arc::new(Session::open(catalog, config)?);
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Runtime::new()?;
    eprintln!("serving {} books on http://{addr}", session.catalog().len());
    runtime.block_on(bookrec_service::serve(session, addr))?;
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let config = PlantedConfig { books: args.books, seed: args.seed, marker_slot: args.marker_slot, ..PlantedConfig::default() };
    let corpus = PlantedCorpus::generate(&config);
    let mut catalog = create(&args.out_dir.join("catalog.jsonl"))?;
    write_catalog(&mut catalog, &corpus.books)?;
    catalog.flush()?;
    let mut ratings = create(&args.out_dir.join("ratings.jsonl"))?;
    write_ratings(&mut ratings, &corpus.ratings)?;
    ratings.flush()?;
    eprintln!("wrote {} books and ratings to {}", corpus.books.len(), args.out_dir.display());
    Ok(())
}
