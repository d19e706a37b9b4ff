//! `brauer` subcommands.

use std::path::{Path, PathBuf};

use isoparity_core::brauer::{
    builtin_group, find_brauer_relations, realize, regulator_constant, tau_candidate, trivial_regulator_constant,
    BrauerRelation, Group, RegulatorConstant, DEFAULT_REALIZE_BUDGET,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{read_file, seed_or_random, CliError, Response};

#[derive(clap::Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct GroupArgs {
    /// built-in group: C2, C3, C4, C2xC2, S3, D10, D14, S4
    #[arg(long)]
    pub group: Option<String>,
    /// group data file (JSON, schema_version 1)
    #[arg(long)]
    pub group_file: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Clone)]
pub struct RelationArgs {
    /// relation such as "2C2+C3-2S3-{1}", using subgroup names from `brauer subgroups`
    #[arg(long)]
    pub relation: Option<String>,
    /// index into the basis printed by `brauer find` (used when --relation is absent)
    #[arg(long, default_value_t = 0)]
    pub index: usize,
}

#[derive(clap::Subcommand, Debug)]
pub enum BrauerCommand {
    /// Subgroups up to conjugacy with their permutation characters
    Subgroups(GroupArgs),
    /// Basis of the lattice of Brauer relations
    Find(GroupArgs),
    /// Equivariant map with nonzero determinant realizing a relation
    Realize {
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        relation: RelationArgs,
        /// maximum number of candidate maps tried
        #[arg(long, default_value_t = DEFAULT_REALIZE_BUDGET)]
        budget: u32,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Regulator constants of the group's representations
    Regulator {
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        relation: RelationArgs,
        /// restrict to these representations (repeatable)
        #[arg(long)]
        rep: Vec<String>,
    },
    /// Candidate τ and the parity congruence check
    Tau {
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        relation: RelationArgs,
        #[arg(long)]
        p: u64,
        /// random direct sums checked in addition to the irreducibles
        #[arg(long, default_value_t = 50)]
        sums: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

pub fn load_group(args: &GroupArgs) -> Result<Group, CliError> {
    match (&args.group, &args.group_file) {
        (Some(name), _) => builtin_group(name).map_err(|e| CliError::Input(e.to_string())),
        (None, Some(path)) => load_group_file(path),
        (None, None) => Err(CliError::Input("either --group or --group-file is required".into())),
    }
}

fn load_group_file(path: &Path) -> Result<Group, CliError> {
    let text = read_file(path)?;
    Group::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Parses `a₁H₁ ± a₂H₂ …`; the trivial subgroup may be written `1` or `{1}`.
pub fn parse_relation(group: &Group, text: &str) -> Result<BrauerRelation, CliError> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() || compact == "0" {
        return Ok(BrauerRelation::zero(group));
    }
    let mut terms: Vec<(i64, String)> = Vec::new();
    let mut sign = 1i64;
    let mut body = String::new();
    let mut depth = 0usize;
    let push = |sign: i64, body: &mut String, terms: &mut Vec<(i64, String)>| -> Result<(), CliError> {
        if body.is_empty() {
            return Err(CliError::Input(format!("empty term in relation {text:?}")));
        }
        terms.push((sign, std::mem::take(body)));
        Ok(())
    };
    for (i, c) in compact.chars().enumerate() {
        match c {
            '{' => {
                depth += 1;
                body.push(c);
            }
            '}' => {
                depth = depth.saturating_sub(1);
                body.push(c);
            }
            '+' | '-' if depth == 0 => {
                if i > 0 {
                    push(sign, &mut body, &mut terms)?;
                }
                sign = if c == '-' { -1 } else { 1 };
            }
            _ => body.push(c),
        }
    }
    push(sign, &mut body, &mut terms)?;

    let mut named = Vec::new();
    for (sign, term) in terms {
        let split = (0..=term.len())
            .filter(|&k| term.is_char_boundary(k) && term[..k].bytes().all(|b| b.is_ascii_digit()))
            .find_map(|k| {
                let name = term[k..].trim_start_matches('{').trim_end_matches('}');
                group.subgroup_index(name).map(|_| (k, name.to_string()))
            });
        let Some((k, name)) = split else {
            return Err(CliError::Input(format!("no subgroup named in term {term:?}")));
        };
        let coeff: i64 = if k == 0 {
            1
        } else {
            term[..k].parse().map_err(|_| CliError::Input(format!("bad coefficient in {term:?}")))?
        };
        named.push((name, sign * coeff));
    }
    BrauerRelation::from_named(group, &named).map_err(|e| CliError::Input(e.to_string()))
}

fn select_relation(group: &Group, args: &RelationArgs) -> Result<BrauerRelation, CliError> {
    if let Some(text) = &args.relation {
        return parse_relation(group, text);
    }
    let basis = find_brauer_relations(group);
    if basis.is_empty() {
        return Ok(BrauerRelation::zero(group));
    }
    basis.get(args.index).cloned().ok_or_else(|| {
        CliError::Input(format!("relation index {} out of range (basis has {} elements)", args.index, basis.len()))
    })
}

#[derive(Serialize, Deserialize)]
pub struct SubgroupsOutput {
    pub summary: isoparity_core::brauer::GroupSummary,
    /// conjugacy class sizes, in the column order of the characters
    pub class_sizes: Vec<usize>,
    pub permutation_characters: Vec<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
pub struct RelationEntry {
    pub coefficients: Vec<i64>,
    pub display: String,
}

#[derive(Serialize, Deserialize)]
pub struct FindOutput {
    pub group: String,
    pub subgroups: Vec<String>,
    pub relations: Vec<RelationEntry>,
}

#[derive(Serialize, Deserialize)]
pub struct RegulatorEntry {
    pub name: String,
    #[serde(flatten)]
    pub constant: RegulatorConstant,
}

#[derive(Serialize, Deserialize)]
pub struct RegulatorOutput {
    pub group: String,
    pub relation: String,
    /// `∏|H_j′|/∏|H_i|`, the value on the trivial representation
    pub trivial_closed_form: String,
    pub constants: Vec<RegulatorEntry>,
}

pub fn run(cmd: &BrauerCommand) -> Result<Response, CliError> {
    match cmd {
        BrauerCommand::Subgroups(g) => {
            let group = load_group(g)?;
            let summary = group.summary();
            let chars: Vec<Vec<i64>> = group
                .subgroup_classes()
                .iter()
                .map(|h| {
                    group
                        .permutation_character(h)
                        .iter()
                        .map(|v| i64::try_from(v).expect("small character value"))
                        .collect()
                })
                .collect();
            let mut human =
                format!("{}: order {}, {} conjugacy classes\n", summary.name, summary.order, summary.conjugacy_classes);
            for (s, c) in summary.subgroups.iter().zip(&chars) {
                human.push_str(&format!(
                    "  {:<8} order {:<4} conjugates {:<4} χ = {c:?}\n",
                    s.name, s.order, s.conjugates
                ));
            }
            let out = SubgroupsOutput {
                class_sizes: group.conjugacy_classes().iter().map(Vec::len).collect(),
                summary,
                permutation_characters: chars,
            };
            Ok(Response::ok(json!(out), human))
        }
        BrauerCommand::Find(g) => {
            let group = load_group(g)?;
            let rels = find_brauer_relations(&group);
            let mut human = format!("{}: relation lattice of rank {}\n", group.name(), rels.len());
            for r in &rels {
                human.push_str(&format!("  {}\n", r.display(&group)));
            }
            let out = FindOutput {
                group: group.name().to_string(),
                subgroups: group.subgroup_classes().iter().map(|h| h.name.clone()).collect(),
                relations: rels
                    .iter()
                    .map(|r| RelationEntry {
                        coefficients: r.coefficients.clone(),
                        display: r.display(&group).to_string(),
                    })
                    .collect(),
            };
            Ok(Response::ok(json!(out), human))
        }
        BrauerCommand::Realize { group, relation, budget, seed } => {
            let group = load_group(group)?;
            let rel = select_relation(&group, relation)?;
            let seed = seed_or_random(*seed);
            let r = realize(&group, &rel, *budget, seed).map_err(|e| match e {
                isoparity_core::brauer::BrauerError::SearchExhausted(_) => CliError::Failed(e.to_string()),
                _ => CliError::Input(e.to_string()),
            })?;
            let equivariant = r.map.is_equivariant(&group) && r.dual.is_equivariant(&group);
            let name = |b: &[usize]| {
                b.iter().map(|&h| format!("Z[G/{}]", group.subgroup_classes()[h].name)).collect::<Vec<_>>().join(" + ")
            };
            let human = format!(
                "relation {}\nΦ: {} → {}\n{}x{} matrix, det Φ = {}, equivariant: {equivariant}, attempts: {}, seed: {seed}\n",
                rel.display(&group),
                name(&r.map.source_blocks),
                name(&r.map.target_blocks),
                r.map.matrix.rows(),
                r.map.matrix.cols(),
                r.determinant,
                r.attempts,
            );
            let value = json!({
                "group": group.name(),
                "relation": rel.display(&group).to_string(),
                "seed": seed,
                "equivariant": equivariant,
                "realization": r,
            });
            Ok(Response { value, human, status: if equivariant { 0 } else { 1 } })
        }
        BrauerCommand::Regulator { group, relation, rep } => {
            let group = load_group(group)?;
            let rel = select_relation(&group, relation)?;
            let reps: Vec<_> =
                group.representations().iter().filter(|r| rep.is_empty() || rep.contains(&r.name)).collect();
            if let Some(missing) = rep.iter().find(|n| !group.representations().iter().any(|r| &r.name == *n)) {
                return Err(CliError::Input(format!("no representation named {missing:?}")));
            }
            let mut constants = Vec::new();
            let mut human = format!("relation {}\n", rel.display(&group));
            for r in reps {
                let c = regulator_constant(&group, &rel, r).map_err(|e| CliError::Input(e.to_string()))?;
                human.push_str(&format!("  C({}) = {}  (class {})\n", r.name, c.value, c.class));
                constants.push(RegulatorEntry { name: r.name.clone(), constant: c });
            }
            let out = RegulatorOutput {
                group: group.name().to_string(),
                relation: rel.display(&group).to_string(),
                trivial_closed_form: trivial_regulator_constant(&group, &rel).to_string(),
                constants,
            };
            Ok(Response::ok(json!(out), human))
        }
        BrauerCommand::Tau { group, relation, p, sums, seed } => {
            let group = load_group(group)?;
            let rel = select_relation(&group, relation)?;
            let seed = seed_or_random(*seed);
            let report = tau_candidate(&group, &rel, *p, group.representations(), *sums, seed)
                .map_err(|e| CliError::Input(e.to_string()))?;
            let mut human = format!(
                "relation {}, p = {p}, seed {seed}\nτ = {}\n",
                report.relation,
                if report.tau.is_empty() { "0".to_string() } else { report.tau.join(" + ") }
            );
            for e in &report.irreducibles {
                human.push_str(&format!(
                    "  {:<14} C = {:<10} ord_p = {:<3} <τ,V> = {:<3} {}\n",
                    e.name,
                    e.regulator_constant.value.to_string(),
                    e.ord_p,
                    e.inner_with_tau.to_string(),
                    if e.holds { "ok" } else { "FAIL" }
                ));
            }
            let ok_sums = report.random_sums.iter().filter(|s| s.holds).count();
            human.push_str(&format!("random sums: {ok_sums}/{} satisfy the congruence\n", report.random_sums.len()));
            let status = if report.pass { 0 } else { 1 };
            Ok(Response { value: json!(report), human, status })
        }
    }
}
