use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use prunechain::deletion::{self, Authorization, Cohesion, DenyReason, RejectReason};
use prunechain::model::{Cosignature, EntryRef, Expiry};
use prunechain::node::{walkthrough, Node, NodeError, TickOutcome};
use prunechain::render::{render_chain, render_entry, RenderOptions};
use prunechain::sim::{parse_script, run_simulation, SimConfig};
use prunechain::summarize::{PruneReport, SummarizeError};
use prunechain::verify::audit_chain;
use prunechain::{
    chainfile, verify_chain, Chain, ChainConfig, Digest, Entry, KeyPair, Role, Verdict, FIXTURE_GENESIS_PREVIOUS_HASH,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::args::{Cli, Command};
use crate::error::{CliError, Kind};
use crate::keyfile::KeyFile;
use crate::schema::{canonical_json, parse_payload, EntrySchema};
use crate::store::{Session, Store};

struct Ctx<'a> {
    cli: &'a Cli,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn emit(&mut self, value: &Value, text: &str) -> Result<(), CliError> {
        if self.cli.json {
            writeln!(self.out, "{value}")?;
        } else if !text.is_empty() {
            writeln!(self.out, "{text}")?;
        }
        Ok(())
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut ctx = Ctx { cli: &cli, out };
    match &cli.command {
        Command::Init { random_genesis, timestamp, force } => init(&mut ctx, *random_genesis, *timestamp, *force),
        Command::Keygen { user, admin, out } => keygen(&mut ctx, user, *admin, out.as_deref()),
        Command::Append { user, payload, payload_file, expire_time, expire_block, depends_on } => {
            let text = match (payload, payload_file) {
                (Some(p), _) => p.clone(),
                (None, Some(path)) => read(path)?,
                (None, None) => return Err(CliError::validation("no-payload", "give --payload or --payload-file")),
            };
            let expiry = expire_time.map(Expiry::ByTime).or(expire_block.map(Expiry::ByBlock));
            append(&mut ctx, user.as_deref(), &text, expiry, depends_on.clone())
        }
        Command::DeleteRequest { user, target, cosign, force } => {
            delete_request(&mut ctx, user.as_deref(), *target, cosign, *force)
        }
        Command::Tick { count, strict } => tick(&mut ctx, *count, *strict),
        Command::Show { color } => show(&mut ctx, *color),
        Command::Verify => verify(&mut ctx),
        Command::Simulate { scenario, nodes, duration, trace } => {
            simulate(&mut ctx, scenario, *nodes, *duration, trace.as_deref())
        }
        Command::Export { out } => export(&mut ctx, out.as_deref()),
        Command::Import { file, force } => import(&mut ctx, file, *force),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<ChainConfig, CliError> {
    let Some(path) = path else {
        return Ok(walkthrough::config());
    };
    let config: ChainConfig =
        serde_yaml::from_str(&read(path)?).map_err(|e| CliError::validation("bad-config", e.to_string()))?;
    config.validate().map_err(|e| CliError::validation("bad-config", e.to_string()))?;
    Ok(config)
}

fn schema_document(path: Option<&Path>) -> Result<Option<Value>, CliError> {
    path.map(|p| EntrySchema::load(p).map(|s| s.document().clone())).transpose()
}

fn default_key_path(chain: &Path, user: &str) -> PathBuf {
    chain.with_file_name(format!("{user}.key"))
}

/// The key file named by `--key`, else the default one for `--user`.
fn signer(cli: &Cli, user: Option<&str>) -> Result<KeyFile, CliError> {
    let file = match (&cli.key, user) {
        (Some(path), _) => KeyFile::load(path)?,
        (None, Some(user)) => KeyFile::load(&default_key_path(&cli.chain, user))?,
        (None, None) => return Err(CliError::validation("no-key", "give --key or --user")),
    };
    if let Some(user) = user {
        if user != file.user {
            return Err(CliError::validation(
                "user-mismatch",
                format!("key file belongs to {}, not {user}", file.user),
            ));
        }
    }
    Ok(file)
}

/// Signing keys that match what the chain has registered for their user.
fn registered_keys(chain: &Chain, file: &KeyFile) -> Result<KeyPair, CliError> {
    let keys = file.keys()?;
    match chain.registry().key_of(&file.user) {
        None => Err(CliError::authorization("unknown-user", format!("{} is not registered", file.user))),
        Some(k) if *k != keys.public() => Err(CliError::authorization(
            "bad-signature",
            format!("key for {} does not match the registered key", file.user),
        )),
        Some(_) => Ok(keys),
    }
}

fn rejection(reason: RejectReason) -> CliError {
    let kind = match reason {
        RejectReason::BadSignature | RejectReason::UnknownUser => Kind::Authorization,
        _ => Kind::Validation,
    };
    CliError::new(kind, reason.code(), "entry refused by the chain")
}

fn node_error(e: NodeError) -> CliError {
    match e {
        NodeError::Rejected(r) => rejection(r),
        NodeError::Summarize(SummarizeError::GuardViolation(g)) => CliError::new(Kind::Guard, "guard", g.to_string()),
        NodeError::Summarize(other) => CliError::new(Kind::BrokenChain, "summarize", other.to_string()),
        NodeError::Append(other) => CliError::new(Kind::BrokenChain, "append", other.to_string()),
    }
}

fn init(ctx: &mut Ctx, random_genesis: bool, timestamp: u64, force: bool) -> Result<(), CliError> {
    let cli = ctx.cli;
    let store = Store::open(&cli.chain)?;
    if store.exists() && !force {
        return Err(CliError::validation(
            "exists",
            format!("{} exists; pass --force to replace it", cli.chain.display()),
        ));
    }
    let config = load_config(cli.config.as_deref())?;
    let previous = if random_genesis {
        let bytes: [u8; 32] = match cli.seed {
            Some(seed) => ChaCha8Rng::seed_from_u64(seed).random(),
            None => rand::rng().random(),
        };
        Digest(bytes)
    } else {
        FIXTURE_GENESIS_PREVIOUS_HASH
    };
    let chain = Chain::new(config, Default::default(), previous, timestamp)
        .map_err(|e| CliError::validation("bad-config", e.to_string()))?;
    let session = Session { clock: timestamp, mempool: Vec::new(), schema: schema_document(cli.schema.as_deref())? };
    store.save_chain(&chain)?;
    store.save_session(&session)?;
    let genesis = chain.head();
    let c = chain.config();
    ctx.emit(
        &json!({ "chain": cli.chain, "genesis": genesis.own_hash, "previous_hash": genesis.previous_hash, "config": c }),
        &format!(
            "initialized {}: genesis {} (delta_l {}, l_max {}, l_min {})",
            cli.chain.display(),
            genesis.own_hash.short(),
            c.delta_l,
            c.l_max,
            c.l_min
        ),
    )
}

fn keygen(ctx: &mut Ctx, user: &str, admin: bool, out: Option<&Path>) -> Result<(), CliError> {
    let cli = ctx.cli;
    let store = Store::open(&cli.chain)?;
    let mut chain = store.load_verified()?;
    let keys = match cli.seed {
        Some(seed) => KeyPair::derive(user, seed),
        None => KeyPair::from_secret(rand::rng().random()),
    };
    let path =
        out.map(Path::to_path_buf).or_else(|| cli.key.clone()).unwrap_or_else(|| default_key_path(&cli.chain, user));
    if path.exists() {
        let existing = KeyFile::load(&path)?;
        if existing.public != keys.public() {
            return Err(CliError::validation("key-exists", format!("{} holds a different key", path.display())));
        }
    }
    let role = if admin { Role::Admin } else { Role::User };
    let registry = chain.registry_mut();
    let registered =
        if admin { registry.set_admin(user, keys.public()) } else { registry.register_user(user, keys.public()) };
    registered.map_err(|e| CliError::validation("registry", e.to_string()))?;
    KeyFile::new(user, role, &keys).save(&path)?;
    store.save_chain(&chain)?;
    ctx.emit(
        &json!({ "user": user, "role": role, "public": keys.public(), "key_file": path }),
        &format!(
            "registered {user} ({}) {}, key in {}",
            if admin { "admin" } else { "user" },
            keys.public().to_hex(),
            path.display()
        ),
    )
}

fn queue(ctx: &mut Ctx, store: &Store, chain: Chain, mut session: Session, entry: Entry) -> Result<(), CliError> {
    let mut node = Node::resume(chain, session.clock, std::mem::take(&mut session.mempool));
    node.submit(entry.clone()).map_err(node_error)?;
    session.mempool = node.mempool;
    store.save_session(&session)?;
    ctx.emit(
        &json!({ "queued": entry, "waiting": session.mempool.len() }),
        &format!("queued {} ({} waiting)", render_entry(&entry), session.mempool.len()),
    )
}

fn append(
    ctx: &mut Ctx,
    user: Option<&str>,
    payload: &str,
    expiry: Option<Expiry>,
    depends_on: Vec<EntryRef>,
) -> Result<(), CliError> {
    let cli = ctx.cli;
    let store = Store::open(&cli.chain)?;
    let chain = store.load_verified()?;
    let session = store.load_session(&chain)?;
    let schema = match (&cli.schema, &session.schema) {
        (Some(path), _) => Some(EntrySchema::load(path)?),
        (None, Some(doc)) => Some(EntrySchema::from_value(doc.clone())?),
        (None, None) => None,
    };
    let value = parse_payload(payload)?;
    if let Some(schema) = &schema {
        schema.check(&value)?;
    }
    let file = signer(cli, user)?;
    let keys = registered_keys(&chain, &file)?;
    let entry = Entry::data(&keys, &file.user, canonical_json(&value), expiry, depends_on);
    queue(ctx, &store, chain, session, entry)
}

fn delete_request(
    ctx: &mut Ctx,
    user: Option<&str>,
    target: EntryRef,
    cosign: &[PathBuf],
    force: bool,
) -> Result<(), CliError> {
    let cli = ctx.cli;
    let store = Store::open(&cli.chain)?;
    let chain = store.load_verified()?;
    let session = store.load_session(&chain)?;
    let file = signer(cli, user)?;
    let keys = registered_keys(&chain, &file)?;
    let mut cosignatures = Vec::new();
    for path in cosign {
        let co = KeyFile::load(path)?;
        cosignatures.push(Cosignature::sign(&registered_keys(&chain, &co)?, &co.user, target));
    }
    let entry = Entry::delete_request(&keys, &file.user, target, cosignatures.clone());
    if !force {
        match deletion::authorize(&chain, &entry) {
            Authorization::Denied(r @ (DenyReason::ForeignEntry | DenyReason::UnknownUser)) => {
                return Err(CliError::authorization(r.code(), format!("{} may not delete {target}", file.user)));
            }
            Authorization::Denied(r) => {
                return Err(CliError::validation(r.code(), format!("{target} cannot be deleted")));
            }
            Authorization::Authorized(_) => {}
        }
        match deletion::check_cohesion(&chain, target, &file.user, &cosignatures) {
            Cohesion::Coherent => {}
            Cohesion::NeedsCosign(parties) => {
                let parties: Vec<String> = parties.into_iter().collect();
                return Err(CliError::authorization(
                    "needs-cosign",
                    format!("entries depending on {target} need cosignatures from {}", parties.join(", ")),
                ));
            }
            Cohesion::Blocked => {
                return Err(CliError::authorization(
                    "cohesion-blocked",
                    format!("an entry depending on {target} belongs to an unregistered user"),
                ));
            }
        }
    }
    queue(ctx, &store, chain, session, entry)
}

fn describe_prune(r: &PruneReport) -> String {
    let first = r.merged_sequences.first().map_or(0, |s| s.number);
    let last = r.merged_sequences.last().map_or(0, |s| s.number);
    let mut s = format!(
        "merged sequences {first}-{last}, marker {} -> {}, length {} -> {}",
        r.old_marker, r.new_marker, r.old_length, r.new_length
    );
    for d in &r.dropped_entries {
        s.push_str(&format!("\n  dropped {} ({})", d.entry, d.reason.code()));
    }
    if let Some(g) = &r.stopped_by {
        s.push_str(&format!("\n  stopped: {g}"));
    }
    s
}

fn describe(clock: u64, outcome: &TickOutcome, chain: &Chain) -> String {
    match outcome {
        TickOutcome::Normal { block, decisions, evicted } => {
            let n = chain.block(*block).map_or(0, |b| b.entries().len());
            let mut s = format!("tick {clock}: block {block}, {n} entries");
            for d in decisions {
                let verdict = match d.verdict {
                    deletion::DeletionVerdict::Approved => "approved".to_string(),
                    deletion::DeletionVerdict::NoEffect(r) => format!("no effect ({})", r.code()),
                };
                s.push_str(&format!("\n  request {} for {}: {verdict}", d.request, d.target));
            }
            for r in evicted {
                s.push_str(&format!("\n  evicted a queued entry ({})", r.code()));
            }
            s
        }
        TickOutcome::Empty { block } => format!("tick {clock}: block {block}, empty"),
        TickOutcome::Summary { block, prune, guard_blocked } => {
            let n = chain.block(*block).map_or(0, |b| b.summary_entries().len());
            let mut s = format!("tick {clock}: summary S{block}, {n} entries");
            if let Some(r) = prune {
                s.push_str(&format!("\n  {}", describe_prune(r)));
            }
            if let Some(g) = guard_blocked {
                s.push_str(&format!("\n  prune blocked: {g}"));
            }
            s
        }
        TickOutcome::Idle => format!("tick {clock}: idle"),
    }
}

fn tick(ctx: &mut Ctx, count: u64, strict: bool) -> Result<(), CliError> {
    let cli = ctx.cli;
    let store = Store::open(&cli.chain)?;
    let chain = store.load_verified()?;
    let mut session = store.load_session(&chain)?;
    let mut node = Node::resume(chain, session.clock, std::mem::take(&mut session.mempool));
    let mut blocked = None;
    let mut lines = Vec::new();
    for _ in 0..count {
        let outcome = node.tick().map_err(node_error)?;
        if let TickOutcome::Summary { guard_blocked: Some(g), .. } = &outcome {
            blocked.get_or_insert(*g);
        }
        let text = describe(node.clock, &outcome, node.chain());
        lines.push((json!({ "tick": node.clock, "outcome": outcome }), text));
    }
    session.clock = node.clock;
    session.mempool = node.mempool.clone();
    store.save_chain(node.chain())?;
    store.save_session(&session)?;
    for (value, text) in &lines {
        ctx.emit(value, text)?;
    }
    match blocked {
        Some(g) if strict => Err(CliError::new(Kind::Guard, "guard", format!("prune blocked: {g}"))),
        _ => Ok(()),
    }
}

fn show(ctx: &mut Ctx, color: bool) -> Result<(), CliError> {
    let store = Store::open(&ctx.cli.chain)?;
    let chain = store.load_chain()?;
    if ctx.cli.json {
        for block in chain.blocks() {
            writeln!(ctx.out, "{}", serde_json::to_string(block).expect("blocks serialize"))?;
        }
    } else {
        write!(ctx.out, "{}", render_chain(&chain, RenderOptions { color }))?;
    }
    Ok(())
}

fn verify(ctx: &mut Ctx) -> Result<(), CliError> {
    let store = Store::open(&ctx.cli.chain)?;
    let chain = store.load_chain()?;
    let report = audit_chain(&chain);
    let verdict = verify_chain(&chain);
    let mut text = match verdict {
        Verdict::Valid => format!(
            "valid: blocks {}..{}, marker {}, length {}",
            chain.marker(),
            chain.head().number,
            chain.marker(),
            chain.len()
        ),
        Verdict::Broken { at, reason } => format!("broken at block {at}: {}", reason.code()),
    };
    text.push_str(&format!(
        "\nredundancy: {} checked, {} mismatched, {} no longer verifiable",
        report.redundancy_checked,
        report.redundancy_mismatches.len(),
        report.redundancy_unverifiable
    ));
    ctx.emit(
        &json!({ "marker": chain.marker(), "head": chain.head().number, "length": chain.len(), "audit": report }),
        &text,
    )?;
    if !verdict.is_valid() {
        return Err(CliError::broken(verdict));
    }
    if let Some(at) = report.redundancy_mismatches.first() {
        return Err(CliError::new(
            Kind::BrokenChain,
            "redundancy-mismatch",
            format!("redundancy reference in block {at} does not match"),
        ));
    }
    Ok(())
}

fn simulate(
    ctx: &mut Ctx,
    scenario: &Path,
    nodes: Option<usize>,
    duration: Option<u64>,
    trace_path: Option<&Path>,
) -> Result<(), CliError> {
    let cli = ctx.cli;
    let text = read(scenario)?;
    let bad = |e: String| CliError::validation("bad-scenario", e);
    let doc: serde_yaml::Value = serde_yaml::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let mut config = if doc.is_sequence() {
        let script = parse_script(&text).map_err(|e| bad(e.to_string()))?;
        SimConfig::new(nodes.unwrap_or(4), cli.seed.unwrap_or(0)).with_script(script)
    } else {
        serde_yaml::from_value::<SimConfig>(doc).map_err(|e| bad(e.to_string()))?
    };
    if let Some(n) = nodes {
        config.n_nodes = n;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.config.is_some() {
        config.chain = load_config(cli.config.as_deref())?;
    }
    if duration.is_some() {
        config.duration = duration;
    }
    let end = config.end_tick();
    let n_nodes = config.n_nodes;
    let trace = run_simulation(config).map_err(|e| bad(e.to_string()))?;
    let Some(path) = trace_path else {
        write!(ctx.out, "{}", trace.to_jsonl())?;
        return Ok(());
    };
    fs::write(path, trace.to_jsonl()).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let checks: Vec<_> = trace.sync_results().collect();
    let forks: Vec<u64> = checks.iter().filter(|(_, s)| s.is_fork()).map(|(h, _)| *h).collect();
    let finals = trace.final_nodes().unwrap_or_default();
    let mut text = format!(
        "{n_nodes} nodes, {end} ticks, {} trace lines in {}\nsummary heights checked: {}, forks: {}",
        trace.lines.len(),
        path.display(),
        checks.len(),
        forks.len()
    );
    for n in finals {
        text.push_str(&format!(
            "\n  node {}: head {}, marker {}, digest {}{}",
            n.node,
            n.head,
            n.marker,
            n.digest.short(),
            if n.faulty { ", faulty" } else { "" }
        ));
    }
    ctx.emit(
        &json!({
            "nodes": n_nodes,
            "ticks": end,
            "trace": path,
            "lines": trace.lines.len(),
            "sync_checks": checks.len(),
            "fork_heights": forks,
            "final": finals,
        }),
        &text,
    )
}

fn export(ctx: &mut Ctx, out: Option<&Path>) -> Result<(), CliError> {
    let store = Store::open(&ctx.cli.chain)?;
    let text = chainfile::to_string(&store.load_chain()?);
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display()))),
        None => Ok(write!(ctx.out, "{text}")?),
    }
}

fn import(ctx: &mut Ctx, file: &Path, force: bool) -> Result<(), CliError> {
    let cli = ctx.cli;
    let chain = chainfile::from_str(&read(file)?)?;
    let verdict = verify_chain(&chain);
    if !verdict.is_valid() {
        return Err(CliError::broken(verdict));
    }
    let store = Store::open(&cli.chain)?;
    if store.exists() && !force {
        return Err(CliError::validation(
            "exists",
            format!("{} exists; pass --force to replace it", cli.chain.display()),
        ));
    }
    let session =
        Session { clock: chain.head().timestamp, mempool: Vec::new(), schema: schema_document(cli.schema.as_deref())? };
    store.save_chain(&chain)?;
    store.save_session(&session)?;
    ctx.emit(
        &json!({ "chain": cli.chain, "marker": chain.marker(), "head": chain.head().number, "digest": chain.digest() }),
        &format!(
            "imported {} blocks into {}: marker {}, head {}",
            chain.len(),
            cli.chain.display(),
            chain.marker(),
            chain.head().number
        ),
    )
}
