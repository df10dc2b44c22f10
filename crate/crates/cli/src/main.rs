use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use langnav_core::classifier::{evaluate_accuracy, tokenize_entries, train, Architecture, ClassifierModel, TrainConfig};
use langnav_core::grounding::{ground_goal, parse_command, GroundingConfig, Lexicon};
use langnav_core::planner::{navigation_step, path_metrics, read_trace, write_trace, NavConfig, NavState, PathMetrics};
use langnav_core::session::AssetStore;
use langnav_core::text::{generate_corpus, split_phrases, normalize, Corpus, Grammar};
use langnav_core::world::load_map;
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "langnav", version, about = "Language-driven navigation in a 2D simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled phrase corpus as JSON lines.
    Corpus {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of instructions to generate.
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        /// Grammar file; the bundled grammar when omitted.
        #[arg(long)]
        grammar: Option<PathBuf>,
    },
    /// Train a phrase classifier on the train split of a corpus.
    Train {
        #[arg(long, default_value = "attbilstm")]
        arch: Architecture,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Classify every phrase of an instruction.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        text: String,
    },
    /// Parse an instruction and ground its goal against a map.
    Ground {
        #[arg(long)]
        model: PathBuf,
        /// Lexicon file; the bundled lexicon when omitted.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        text: String,
    },
    /// Run one instruction to completion and print the path metrics.
    Simulate {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        instruction: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the per-tick trace here.
        #[arg(long)]
        record: Option<PathBuf>,
        #[arg(long, default_value_t = 3000)]
        max_ticks: u64,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
    },
    /// Summarize a recorded trace.
    Metrics {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Serve the HTTP session API.
    Serve {
        #[arg(long, default_value = "assets")]
        assets: PathBuf,
        /// Port on 127.0.0.1; otherwise LANGNAV_ADDR or 127.0.0.1:8080.
        #[arg(long)]
        port: Option<u16>,
    },
}

fn load_lexicon(path: Option<&PathBuf>) -> Result<Lexicon> {
    match path {
        Some(p) => Lexicon::load(p).with_context(|| format!("loading lexicon {}", p.display())),
        None => Ok(Lexicon::shipped()),
    }
}

fn load_model(path: &PathBuf) -> Result<ClassifierModel> {
    ClassifierModel::load(path).with_context(|| format!("loading model {}", path.display()))
}

fn print_metrics(m: &PathMetrics) {
    println!("reached      {}", m.reached);
    println!("length       {:.3} m", m.length);
    println!("duration     {:.1} s", m.duration);
    println!("collisions   {}", m.collisions);
    println!("static clear {:.3} m", m.min_static_clearance);
    for (label, d) in &m.min_object_distance {
        println!("min {label:<9}{d:.3} m");
    }
}

fn fmt_probs(p: &[f64; 3]) -> String {
    format!("goal {:.3}  constraint {:.3}  uninformative {:.3}", p[0], p[1], p[2])
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Corpus { seed, count, out, grammar } => {
            let g = match grammar {
                Some(p) => Grammar::load(&p)?,
                None => Grammar::shipped(),
            };
            let c = generate_corpus(&g, seed, count)?;
            c.save(&out)?;
            println!(
                "wrote {} train and {} test phrases from {} instructions to {}",
                c.train.len(),
                c.test.len(),
                c.instructions.len(),
                out.display()
            );
        }
        Command::Train { arch, corpus, seed, out, epochs } => {
            let c = Corpus::load(&corpus)?;
            let mut cfg = TrainConfig { seed, ..TrainConfig::default() };
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            let (model, report) = train(&c.train, &cfg, arch)?;
            model.save(&out)?;
            println!("{arch}: final loss {:.6} after {} epochs", report.final_loss, report.loss_curve.len());
            if !c.test.is_empty() {
                let test = tokenize_entries(&c.test, &model.vocab)?;
                println!("test accuracy {:.4} on {} phrases", evaluate_accuracy(&model, &test)?, test.len());
            }
            println!("saved {}", out.display());
        }
        Command::Classify { model, text } => {
            let m = load_model(&model)?;
            for phrase in split_phrases(&normalize(&text)?)? {
                let c = m.classify_text(&phrase)?;
                println!("{phrase:?} -> {}  ({})", c.label, fmt_probs(&c.probs));
                if let Some(att) = &c.attention {
                    let weights: Vec<String> = phrase
                        .split_whitespace()
                        .zip(att)
                        .map(|(w, a)| format!("{w}:{a:.3}"))
                        .collect();
                    println!("    attention {}", weights.join(" "));
                }
            }
        }
        Command::Ground { model, lexicon, map, text } => {
            let m = load_model(&model)?;
            let lex = load_lexicon(lexicon.as_ref())?;
            let map = load_map(&map)?;
            let cfg = GroundingConfig::default();
            let p = parse_command(&text, 0, &m, &lex)?;
            for ph in &p.phrases {
                let nouns: Vec<&str> = ph.nouns.iter().map(|n| n.word.as_str()).collect();
                println!("{:?} -> {} nouns {:?}", ph.text, ph.label, nouns);
            }
            match &p.goal_noun {
                Some(n) => match ground_goal(&n.word, &map, &lex, &cfg) {
                    Ok(g) => println!(
                        "goal {:?} -> {} at ({:.2}, {:.2}) score {:.3}",
                        n.word, g.location, g.position.x, g.position.y, g.score
                    ),
                    Err(e) => println!("goal {:?} not grounded: {e}", n.word),
                },
                None => println!("goal: none"),
            }
            for n in &p.constraint_nouns {
                let mut labels: Vec<&str> = map.objects.iter().map(|o| o.label.as_str()).collect();
                labels.sort();
                labels.dedup();
                let matches: Vec<String> = labels
                    .iter()
                    .filter_map(|l| lex.cosine(&n.word, l).ok().map(|s| (l, s)))
                    .filter(|(_, s)| *s > cfg.constraint_threshold)
                    .map(|(l, s)| format!("{l} {s:.3}"))
                    .collect();
                println!("constraint {:?} matches [{}]", n.word, matches.join(", "));
            }
        }
        Command::Simulate { map, model, lexicon, instruction, seed, record, max_ticks, dt } => {
            if !(dt > 0.0) {
                bail!("--dt must be positive");
            }
            let m = load_model(&model)?;
            let lex = load_lexicon(lexicon.as_ref())?;
            let map = load_map(&map)?;
            let p = parse_command(&instruction, 0, &m, &lex)?;
            let Some(noun) = &p.goal_noun else {
                bail!("instruction has no goal");
            };
            let goal = ground_goal(&noun.word, &map, &lex, &GroundingConfig::default())?;
            println!("goal {} at ({:.2}, {:.2})", goal.location, goal.position.x, goal.position.y);
            println!("constraints {:?}", p.constraint_words());
            let mut cfg = NavConfig::default();
            cfg.planner.seed = seed;
            let mut state = NavState::new(map, cfg);
            state.set_goal(goal, p.constraint_words());
            for _ in 0..max_ticks {
                navigation_step(&mut state, &lex, dt);
                if state.status.is_terminal() {
                    break;
                }
            }
            println!("status {:?} after {} ticks", state.status, state.tick);
            print_metrics(&state.metrics());
            if let Some(path) = record {
                let f = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_trace(&state.trace, std::io::BufWriter::new(f))?;
                println!("trace written to {}", path.display());
            }
        }
        Command::Metrics { trace } => {
            let f = std::fs::File::open(&trace).with_context(|| format!("opening {}", trace.display()))?;
            let records = read_trace(BufReader::new(f)).map_err(anyhow::Error::msg)?;
            println!("ticks        {}", records.len());
            print_metrics(&path_metrics(&records));
        }
        Command::Serve { assets, port } => {
            if !assets.join("maps").is_dir() {
                bail!("{} has no maps directory", assets.display());
            }
            let addr: SocketAddr = match port {
                Some(p) => SocketAddr::from(([127, 0, 0, 1], p)),
                None => langnav_service::addr_from_env().map_err(anyhow::Error::msg)?,
            };
            tracing_subscriber::fmt().init();
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(langnav_service::serve(AssetStore::new(assets), addr))?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
