/**
 * The flat decode-step surface: one request of primitive scalars plus a
 * score array in, one probability array (and optionally a sampled token)
 * out. Host generation loops can use this as a per-token logit processor.
 */

import {
  CoverageSolveOptions,
  WeightSchemeSpec,
  coverageDecode,
  greedyDecode,
  makeWeights,
  nucleusIndices,
  restrictedSoftmax,
  softmaxDecode,
  sparsemaxDecode,
  topkIndices,
} from "./decoders.js";
import { DecodeStepError } from "./errors.js";
import { allFinite, kahanCdf, searchsortedRight } from "./math.js";
import { PhiloxStream } from "./philox.js";

export type DecoderKind = "greedy" | "softmax" | "topk" | "topp" | "sparsemax" | "bok";

export interface FlatDecodeRequest {
  scores: ArrayLike<number>;
  decoder: DecoderKind;
  /** Regulariser weight / temperature; default 1.0. */
  lambda?: number;
  /** Top-K support size. */
  k?: number;
  /** Top-P nucleus mass. */
  p?: number;
  /** Coverage sample budget; default 8. */
  K?: number;
  /** Coverage weight; default 1.0. */
  betaBar?: number;
  weightScheme?: WeightSchemeSpec;
  /** Mirror-ascent iterations; default 5. */
  steps?: number;
  /** Mirror-ascent step size; default 0.5. */
  eta?: number;
  /** When present, a token is sampled from the result. */
  seed?: number | bigint;
  streamId?: number | bigint;
}

export interface DecodeStepResult {
  probs: Float64Array;
  sampledIndex?: number;
  supportSize: number;
  solverIters: number;
}

const KINDS: readonly DecoderKind[] = ["greedy", "softmax", "topk", "topp", "sparsemax", "bok"];

function validateScores(raw: ArrayLike<number>): Float64Array {
  if (raw.length === 0) {
    throw new DecodeStepError("EmptyScores", "scores must be non-empty");
  }
  const s = Float64Array.from(raw as ArrayLike<number>);
  if (!allFinite(s)) {
    throw new DecodeStepError("NonFiniteEntry", "scores must all be finite");
  }
  return s;
}

function supportSize(q: Float64Array): number {
  let count = 0;
  for (let i = 0; i < q.length; i++) if (q[i] !== 0.0) count++;
  return count;
}

export function sampleIndex(
  q: Float64Array,
  seed: number | bigint,
  streamId: number | bigint = 0,
): number {
  const cdf = kahanCdf(q);
  let stream: PhiloxStream;
  try {
    stream = new PhiloxStream(seed, streamId);
  } catch (err) {
    throw new DecodeStepError("BadStream", (err as Error).message);
  }
  return searchsortedRight(cdf, stream.nextDouble());
}

export function decodeStep(request: FlatDecodeRequest): DecodeStepResult {
  if (!KINDS.includes(request.decoder)) {
    throw new DecodeStepError("UnknownDecoder", `unknown decoder ${String(request.decoder)}`);
  }
  const s = validateScores(request.scores);
  const lambda = request.lambda ?? 1.0;

  let probs: Float64Array;
  let solverIters = 0;
  switch (request.decoder) {
    case "greedy":
      probs = greedyDecode(s);
      break;
    case "softmax":
      probs = softmaxDecode(s, lambda);
      break;
    case "topk": {
      if (request.k === undefined) {
        throw new DecodeStepError("KOutOfRange", "topk requires k");
      }
      probs = restrictedSoftmax(s, topkIndices(s, request.k), lambda);
      break;
    }
    case "topp": {
      if (request.p === undefined) {
        throw new DecodeStepError("POutOfRange", "topp requires p");
      }
      const pModel = softmaxDecode(s, lambda);
      probs = restrictedSoftmax(s, nucleusIndices(pModel, request.p), lambda);
      break;
    }
    case "sparsemax":
      probs = sparsemaxDecode(s, lambda);
      break;
    case "bok": {
      const K = request.K ?? 8;
      const betaBar = request.betaBar ?? 1.0;
      const steps = request.steps ?? 5;
      const eta = request.eta ?? 0.5;
      if (!Number.isInteger(K) || K < 1) {
        throw new DecodeStepError("OutOfRange", `K must be an integer >= 1, got ${K}`);
      }
      if (!(lambda > 0)) {
        throw new DecodeStepError("NonPositiveLambda", `lambda must be > 0, got ${lambda}`);
      }
      if (betaBar < 0) {
        throw new DecodeStepError("OutOfRange", `betaBar must be >= 0, got ${betaBar}`);
      }
      if (!Number.isInteger(steps) || steps < 1 || !(eta > 0)) {
        throw new DecodeStepError("OutOfRange", "need steps >= 1 and eta > 0");
      }
      const pModel = softmaxDecode(s, 1.0);
      const scheme = request.weightScheme ?? { kind: "model_prob" };
      const options: CoverageSolveOptions = {
        K,
        lambda,
        betaBar,
        eta,
        steps,
        weights: makeWeights(scheme, s, pModel),
      };
      const solved = coverageDecode(s, pModel, options);
      probs = solved.q;
      solverIters = solved.iters;
      break;
    }
  }

  const result: DecodeStepResult = {
    probs,
    supportSize: supportSize(probs),
    solverIters,
  };
  if (request.seed !== undefined) {
    result.sampledIndex = sampleIndex(probs, request.seed, request.streamId ?? 0);
  }
  return result;
}

export type BatchItem =
  | { ok: true; value: DecodeStepResult }
  | { ok: false; code: string; message: string };

/** Order-preserving map of decodeStep with positional error markers. */
export function batchDecode(requests: readonly FlatDecodeRequest[]): BatchItem[] {
  let vocab: number | null = null;
  return requests.map((request) => {
    try {
      if (vocab === null && request.scores.length > 0) {
        vocab = request.scores.length;
      } else if (vocab !== null && request.scores.length !== vocab) {
        throw new DecodeStepError(
          "InconsistentVocabSize",
          `expected ${vocab} scores, got ${request.scores.length}`,
        );
      }
      return { ok: true, value: decodeStep(request) };
    } catch (err) {
      if (err instanceof DecodeStepError) {
        return { ok: false, code: err.code, message: err.message };
      }
      throw err;
    }
  });
}
