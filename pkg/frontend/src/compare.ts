/** Run comparison: aligned per-year series and cumulative totals for two
 * persisted runs. Per-year figures are traced response fields; the totals
 * table is the only derived quantity (an exact sum over log fields) and is
 * cross-checked against the raw run records by the contract tests. */

import { trace, type TracedValue } from "./traced";
import { TERMS, type RunRecord, type Term } from "./types";

export interface YearPoint {
  year: number;
  reward: TracedValue;
  perZone: Record<string, Record<Term, TracedValue>>;
}

export interface RunSeries {
  runId: string;
  mode: string;
  points: YearPoint[];
}

export interface CompareView {
  a: RunSeries;
  b: RunSeries;
  /** Set when the two runs come from different scenario bundles. */
  warning: string | null;
  totals: Record<Term, { a: number; b: number }> & {
    reward: { a: number; b: number };
  };
}

function seriesOf(run: RunRecord, source: string): RunSeries {
  const points = run.log.map((rec, i) => {
    const perZone: Record<string, Record<Term, TracedValue>> = {};
    for (const zone of Object.keys(rec.per_zone)) {
      const terms = {} as Record<Term, TracedValue>;
      for (const term of TERMS) {
        terms[term] = trace(run, source, ["log", i, "per_zone", zone, term]);
      }
      perZone[zone] = terms;
    }
    return {
      year: rec.year,
      reward: trace(run, source, ["log", i, "R"]),
      perZone,
    };
  });
  return { runId: run.run_id, mode: run.mode, points };
}

function totalOf(run: RunRecord, term: Term): number {
  let total = 0.0;
  for (const rec of run.log) {
    for (const zone of Object.keys(rec.per_zone)) {
      total += rec.per_zone[zone]![term];
    }
  }
  return total;
}

function rewardTotal(run: RunRecord): number {
  let total = 0.0;
  for (const rec of run.log) {
    total += rec.R;
  }
  return total;
}

export function compareRuns(a: RunRecord, b: RunRecord): CompareView {
  const warning =
    a.scenario_hash === b.scenario_hash
      ? null
      : `runs come from different scenarios (${a.scenario_hash.slice(0, 12)} vs ` +
        `${b.scenario_hash.slice(0, 12)}); charts are not comparable`;
  const totals = {} as CompareView["totals"];
  for (const term of TERMS) {
    totals[term] = { a: totalOf(a, term), b: totalOf(b, term) };
  }
  totals.reward = { a: rewardTotal(a), b: rewardTotal(b) };
  return { a: seriesOf(a, "run:a"), b: seriesOf(b, "run:b"), warning, totals };
}
