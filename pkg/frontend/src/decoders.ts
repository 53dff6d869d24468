/**
 * Decoders over the probability simplex, numerically matched to the
 * primary package: each routine maximises <q, s> - lambda * Omega(q) for
 * its regulariser, ties always break toward the lowest token index, and
 * operation order mirrors the primary implementation so results agree to
 * well below 1e-12.
 */

import { DecodeStepError } from "./errors.js";
import {
  argsortDescStable,
  cumsum,
  maxOf,
  searchsortedLeft,
  sum,
} from "./math.js";

export function greedyDecode(s: Float64Array): Float64Array {
  const q = new Float64Array(s.length);
  let best = 0;
  for (let i = 1; i < s.length; i++) {
    if (s[i] > s[best]) best = i;
  }
  q[best] = 1.0;
  return q;
}

export function softmaxDecode(s: Float64Array, lambda: number): Float64Array {
  if (!(lambda > 0)) {
    throw new DecodeStepError("NonPositiveLambda", `lambda must be > 0, got ${lambda}`);
  }
  const m = maxOf(s);
  const e = new Float64Array(s.length);
  for (let i = 0; i < s.length; i++) e[i] = Math.exp((s[i] - m) / lambda);
  const total = sum(e);
  for (let i = 0; i < e.length; i++) e[i] /= total;
  return e;
}

export function topkIndices(s: Float64Array, k: number): number[] {
  if (!Number.isInteger(k) || k < 1 || k > s.length) {
    throw new DecodeStepError("KOutOfRange", `k=${k} outside [1, ${s.length}]`);
  }
  return argsortDescStable(s).slice(0, k);
}

export function nucleusIndices(pModel: Float64Array, p: number): number[] {
  if (!(p > 0 && p <= 1)) {
    throw new DecodeStepError("POutOfRange", `p=${p} outside (0, 1]`);
  }
  const order = argsortDescStable(pModel);
  const sorted = order.map((i) => pModel[i]);
  const cum = cumsum(sorted);
  let m = searchsortedLeft(cum, p);
  if (m >= pModel.length) m = pModel.length - 1;
  while (m > 0 && sorted[m] === 0.0) m--;
  return order.slice(0, m + 1);
}

export function restrictedSoftmax(
  s: Float64Array,
  indices: number[],
  lambda: number,
): Float64Array {
  if (!(lambda > 0)) {
    throw new DecodeStepError("NonPositiveLambda", `lambda must be > 0, got ${lambda}`);
  }
  const sub = indices.map((i) => s[i]);
  const m = maxOf(sub);
  const e = sub.map((v) => Math.exp((v - m) / lambda));
  const total = sum(e);
  const q = new Float64Array(s.length);
  indices.forEach((idx, j) => {
    q[idx] = e[j] / total;
  });
  return q;
}

export function sparsemaxThreshold(
  s: Float64Array,
  lambda: number,
): { eta: number; kStar: number } {
  if (!(lambda > 0)) {
    throw new DecodeStepError("NonPositiveLambda", `lambda must be > 0, got ${lambda}`);
  }
  const sorted = Array.from(s).sort((a, b) => b - a);
  const prefix = cumsum(sorted);
  let fallback = 0;
  for (let k = 1; k <= sorted.length; k++) {
    const eta = (prefix[k - 1] - lambda) / k;
    const next = k < sorted.length ? sorted[k] : -Infinity;
    if (sorted[k - 1] > eta) fallback = k;
    if (sorted[k - 1] > eta && next <= eta) {
      return { eta, kStar: k };
    }
  }
  // Float-degenerate fallback, same rule as the primary.
  const eta = (prefix[fallback - 1] - lambda) / fallback;
  return { eta, kStar: fallback };
}

export function sparsemaxDecode(s: Float64Array, lambda: number): Float64Array {
  const { eta } = sparsemaxThreshold(s, lambda);
  const q = new Float64Array(s.length);
  for (let i = 0; i < s.length; i++) q[i] = Math.max(s[i] - eta, 0.0) / lambda;
  return q;
}

export type WeightSchemeSpec =
  | { kind: "uniform" }
  | { kind: "model_prob" }
  | { kind: "top_m_indicator"; m: number }
  | { kind: "rank_softened"; gamma: number };

export function makeWeights(
  scheme: WeightSchemeSpec,
  s: Float64Array,
  pModel: Float64Array,
): Float64Array {
  switch (scheme.kind) {
    case "uniform":
      return new Float64Array(s.length).fill(1.0);
    case "model_prob":
      return Float64Array.from(pModel);
    case "top_m_indicator": {
      if (!Number.isInteger(scheme.m) || scheme.m < 1 || scheme.m > s.length) {
        throw new DecodeStepError("InvalidSchemeParam", `top_m needs 1 <= M <= ${s.length}`);
      }
      const w = new Float64Array(s.length);
      for (const i of argsortDescStable(s).slice(0, scheme.m)) w[i] = 1.0;
      return w;
    }
    case "rank_softened": {
      if (!(scheme.gamma > 0)) {
        throw new DecodeStepError("InvalidSchemeParam", "rank_softened needs gamma > 0");
      }
      const w = new Float64Array(s.length);
      argsortDescStable(s).forEach((idx, rank0) => {
        w[idx] = 1.0 / (rank0 + 1) ** scheme.gamma;
      });
      return w;
    }
  }
}

export interface CoverageSolveOptions {
  K: number;
  lambda: number;
  betaBar: number;
  eta: number;
  steps: number;
  weights: Float64Array;
}

const REFERENCE_FLOOR = 1e-30;
const DECREASE_SLACK = 1e-15;
const MAX_HALVINGS = 10;

function coverageGradient(
  q: Float64Array,
  s: Float64Array,
  pf: Float64Array,
  o: CoverageSolveOptions,
): Float64Array {
  const g = new Float64Array(q.length);
  for (let i = 0; i < q.length; i++) {
    if (q[i] === 0.0) {
      g[i] = 0.0; // dead for the multiplicative update
      continue;
    }
    g[i] =
      s[i] -
      o.lambda * (Math.log(q[i] / pf[i]) + 1.0) +
      o.betaBar * o.weights[i] * o.K * (1.0 - q[i]) ** (o.K - 1);
  }
  return g;
}

function coverageObjective(
  q: Float64Array,
  s: Float64Array,
  pf: Float64Array,
  o: CoverageSolveOptions,
): number {
  const klTerms: number[] = [];
  const scoreTerms: number[] = [];
  const covTerms: number[] = [];
  for (let i = 0; i < q.length; i++) {
    scoreTerms.push(q[i] * s[i]);
    covTerms.push(o.weights[i] * (1.0 - (1.0 - q[i]) ** o.K));
    if (q[i] > 0.0) klTerms.push(q[i] * Math.log(q[i] / pf[i]));
  }
  return sum(scoreTerms) - o.lambda * sum(klTerms) + o.betaBar * sum(covTerms);
}

function mirrorStep(q: Float64Array, g: Float64Array, eta: number): Float64Array {
  let shift = -Infinity;
  for (let i = 0; i < q.length; i++) {
    if (q[i] > 0.0) {
      const z = eta * g[i];
      if (z > shift) shift = z;
    }
  }
  const w = new Float64Array(q.length);
  for (let i = 0; i < q.length; i++) {
    if (q[i] > 0.0) w[i] = q[i] * Math.exp(eta * g[i] - shift);
  }
  const total = sum(w);
  for (let i = 0; i < w.length; i++) w[i] /= total;
  return w;
}

/**
 * Coverage decoder: mirror ascent on
 * <q,s> - lambda*KL(q||p) + betaBar * sum w * (1 - (1-q)^K), warm-started
 * at the reference, with the same objective-tracking halving safeguard as
 * the primary solver. Runs exactly `steps` iterations unless an iterate
 * reproduces itself bit-for-bit.
 */
export function coverageDecode(
  s: Float64Array,
  pModel: Float64Array,
  o: CoverageSolveOptions,
): { q: Float64Array; iters: number } {
  let hasZero = false;
  const pf = new Float64Array(pModel.length);
  for (let i = 0; i < pModel.length; i++) {
    if (pModel[i] === 0.0) hasZero = true;
    pf[i] = Math.max(pModel[i], REFERENCE_FLOOR);
  }
  let q: Float64Array = Float64Array.from(hasZero ? pf : pModel);
  let eta = o.eta;
  let fCur = coverageObjective(q, s, pf, o);
  let iters = 0;

  for (let j = 0; j < o.steps; j++) {
    const g = coverageGradient(q, s, pf, o);
    let qNext = mirrorStep(q, g, eta);
    let fNext = coverageObjective(qNext, s, pf, o);
    const slack = DECREASE_SLACK * Math.max(1.0, Math.abs(fCur));
    let halvings = 0;
    while (fNext < fCur - slack && halvings < MAX_HALVINGS) {
      eta *= 0.5;
      halvings += 1;
      qNext = mirrorStep(q, g, eta);
      fNext = coverageObjective(qNext, s, pf, o);
    }
    fCur = fNext;
    let delta = 0.0;
    for (let i = 0; i < q.length; i++) {
      const d = Math.abs(qNext[i] - q[i]);
      if (d > delta) delta = d;
    }
    q = qNext;
    iters = j + 1;
    if (delta <= 0.0) break;
  }
  return { q, iters };
}
