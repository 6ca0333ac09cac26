//! Markdown rendering of an [`AnalysisReport`]. Output depends only on the
//! report contents, so identical inputs give byte-identical text.

use std::fmt::Write;

use crossrays_core::stats::anova::EffectFlag;
use crossrays_core::stats::descriptive::BOOTSTRAP_RESAMPLES;
use crossrays_core::stats::{stars, Descriptive, EffectResult, PairwiseResult};

use crate::analysis::{describe_cell, fmt_distance, AnalysisReport, MeasureAnalysis, QuestionnaireAnalysis};

fn unit(measure: &str) -> &'static str {
    match measure {
        "selection_time" => " (s)",
        "error_distance" => " (m)",
        _ => "",
    }
}

pub fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        "< .001".into()
    } else {
        let s = format!("{p:.3}");
        format!("= {}", s.trim_start_matches('0'))
    }
}

fn fmt_num(x: f64, digits: usize) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.digits$}")
    }
}

fn m_sd(d: &Descriptive) -> String {
    format!("{:.3} ({:.3})", d.mean, d.sd)
}

fn effect_row(out: &mut String, name: &str, e: &EffectResult) {
    let note = match e.flag {
        Some(EffectFlag::NoEffect) => " no variance between levels",
        Some(EffectFlag::ZeroError) => " zero error variance",
        None if e.epsilon_degenerate => " epsilon undefined, set to 1",
        None => "",
    };
    let _ = writeln!(
        out,
        "| {name} | F({:.2}, {:.2}) = {} | {:.3} | p {} {} | {:.3} |{note}",
        e.df1_adj(),
        e.df2_adj(),
        fmt_num(e.f, 2),
        e.epsilon_gg,
        fmt_p(e.p),
        stars(e.p),
        e.eta_p_sq,
    );
}

fn lsd_matrix(out: &mut String, labels: &[String], lsd: &PairwiseResult) {
    let _ = write!(out, "| |");
    for l in labels {
        let _ = write!(out, " {l} |");
    }
    out.push('\n');
    out.push_str("|---|");
    out.push_str(&"---|".repeat(labels.len()));
    out.push('\n');
    for (i, li) in labels.iter().enumerate() {
        let _ = write!(out, "| {li} |");
        for j in 0..labels.len() {
            match lsd.get(i, j) {
                Some(c) if i != j => {
                    let _ = write!(out, " {:+.3}, p {} {} |", c.mean_diff, fmt_p(c.p), stars(c.p));
                }
                _ => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    out.push_str("\nCells give row minus column and the uncorrected LSD p.\n\n");
}

fn measure_section(out: &mut String, m: &MeasureAnalysis) {
    let name = m.measure.as_str();
    let _ = writeln!(out, "## {} / {}{}\n", m.task.as_str(), name, unit(name));
    let _ = writeln!(out, "Participants analyzed: {}", m.participants.len());
    if !m.dropped.is_empty() {
        let ids: Vec<String> = m.dropped.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "Dropped for missing cells: {}", ids.join(", "));
    }
    out.push('\n');

    out.push_str("### Descriptives\n\nM (SD) over participant medians.\n\n| Technique |");
    for d in &m.distances {
        let _ = write!(out, " {} m |", fmt_distance(*d));
    }
    out.push_str(" All |\n|---|");
    out.push_str(&"---|".repeat(m.distances.len() + 1));
    out.push('\n');
    for (ti, t) in m.techniques.iter().enumerate() {
        let _ = write!(out, "| {} |", t.short());
        for c in &m.cells[ti] {
            let _ = write!(out, " {} |", m_sd(c));
        }
        let _ = writeln!(out, " {} |", m_sd(&m.by_technique[ti]));
    }
    out.push_str("| All |");
    for d in &m.by_distance {
        let _ = write!(out, " {} |", m_sd(d));
    }
    out.push_str(" |\n\n");

    out.push_str("| Technique | Median | 95% CI of median |\n|---|---|---|\n");
    for (t, d) in m.techniques.iter().zip(&m.by_technique) {
        let _ = writeln!(out, "| {} | {:.3} | [{:.3}, {:.3}] |", t.short(), d.median, d.ci95_median.0, d.ci95_median.1);
    }
    for (dist, d) in m.distances.iter().zip(&m.by_distance) {
        let _ = writeln!(
            out,
            "| {} m | {:.3} | [{:.3}, {:.3}] |",
            fmt_distance(*dist),
            d.median,
            d.ci95_median.0,
            d.ci95_median.1
        );
    }
    out.push('\n');

    out.push_str("### Repeated-measures ANOVA\n\nGreenhouse-Geisser corrected degrees of freedom and p.\n\n");
    out.push_str("| Effect | F | GG epsilon | p | partial eta squared |\n|---|---|---|---|---|\n");
    effect_row(out, "technique", &m.anova.a);
    effect_row(out, "distance", &m.anova.b);
    effect_row(out, "technique x distance", &m.anova.ab);
    out.push('\n');

    let tech_labels: Vec<String> = m.techniques.iter().map(|t| t.short().to_string()).collect();
    let dist_labels: Vec<String> = m.distances.iter().map(|d| format!("{} m", fmt_distance(*d))).collect();
    out.push_str("### LSD: technique\n\n");
    lsd_matrix(out, &tech_labels, &m.lsd_technique);
    out.push_str("### LSD: distance\n\n");
    lsd_matrix(out, &dist_labels, &m.lsd_distance);

    if m.interaction_significant() {
        out.push_str(
            "### Simple effects\n\n| Slice | F | GG epsilon | p | partial eta squared |\n|---|---|---|---|---|\n",
        );
        for s in &m.technique_at_distance {
            effect_row(out, &format!("technique at {} m", fmt_distance(s.level)), &s.anova.effect);
        }
        for s in &m.distance_at_technique {
            effect_row(out, &format!("distance at {}", s.level.short()), &s.anova.effect);
        }
        out.push('\n');
        for s in &m.technique_at_distance {
            let _ = writeln!(out, "#### LSD: technique at {} m\n", fmt_distance(s.level));
            lsd_matrix(out, &tech_labels, &s.lsd);
        }
        for s in &m.distance_at_technique {
            let _ = writeln!(out, "#### LSD: distance at {}\n", s.level.short());
            lsd_matrix(out, &dist_labels, &s.lsd);
        }
    } else {
        let _ = writeln!(out, "Interaction p {}: no simple effects reported.\n", fmt_p(m.anova.ab.p));
    }
}

fn questionnaire_section(out: &mut String, q: &QuestionnaireAnalysis) {
    let _ = writeln!(out, "### {} / {} {}\n", q.task.as_str(), q.instrument.as_str(), q.dimension);
    out.push_str("| Technique | M (SD) |\n|---|---|\n");
    for (t, d) in q.techniques.iter().zip(&q.by_technique) {
        let _ = writeln!(out, "| {} | {} |", t.short(), m_sd(d));
    }
    out.push_str("\n| Effect | F | GG epsilon | p | partial eta squared |\n|---|---|---|---|---|\n");
    effect_row(out, "technique", &q.anova.effect);
    out.push('\n');
    let labels: Vec<String> = q.techniques.iter().map(|t| t.short().to_string()).collect();
    lsd_matrix(out, &labels, &q.lsd);
}

pub fn render_markdown(r: &AnalysisReport) -> String {
    let mut out = String::new();
    out.push_str("# Analysis report\n\n");
    let _ = writeln!(out, "Records: {}", r.quality.records);
    let _ = writeln!(out, "Participants: {}", r.participants.len());
    let _ = writeln!(out, "Bootstrap: {BOOTSTRAP_RESAMPLES} resamples, seed {}", r.bootstrap_seed);
    out.push_str("Significance: ns p >= .05, * p < .05, ** p < .01, *** p < .001\n\n");

    for m in &r.measures {
        measure_section(&mut out, m);
    }

    if !r.questionnaire.is_empty() || !r.questionnaire_skipped.is_empty() {
        out.push_str("## Questionnaire\n\n");
        for q in &r.questionnaire {
            questionnaire_section(&mut out, q);
        }
        for (task, inst, dim) in &r.questionnaire_skipped {
            let _ = writeln!(
                out,
                "Skipped {} / {} {}: fewer than two complete participants.",
                task.as_str(),
                inst.as_str(),
                dim
            );
        }
        out.push('\n');
    }

    out.push_str("## Hypotheses\n\n");
    for th in &r.hypotheses {
        let _ = writeln!(out, "### {}\n", th.task.as_str());
        out.push_str("| Hypothesis | Statement | Verdict | Comparisons held |\n|---|---|---|---|\n");
        for h in &th.results {
            let held = h.comparisons.iter().filter(|c| c.holds).count();
            let _ = writeln!(
                out,
                "| {} | {} | {} | {}/{} |",
                h.id,
                h.statement,
                h.verdict.as_str(),
                held,
                h.comparisons.len()
            );
        }
        out.push('\n');
    }

    out.push_str("## Data quality\n\n");
    let _ = writeln!(out, "Timeouts: {} of {} trials\n", r.quality.timeouts, r.quality.records);
    if !r.quality.timeout_cells.is_empty() {
        out.push_str("| Task | Technique | Distance | Timeouts |\n|---|---|---|---|\n");
        for c in &r.quality.timeout_cells {
            let _ = writeln!(
                out,
                "| {} | {} | {} m | {}/{} |",
                c.task.as_str(),
                c.technique.short(),
                fmt_distance(c.distance),
                c.timeouts,
                c.trials
            );
        }
        out.push('\n');
    }
    if !r.quality.empty_cells.is_empty() {
        out.push_str("Cells without a valid trial:\n\n");
        for k in &r.quality.empty_cells {
            let _ = writeln!(out, "- {}", describe_cell(k));
        }
        out.push('\n');
    }
    out
}
