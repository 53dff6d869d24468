import { describe, expect, it } from "vitest";

import { batchDecode, decodeStep } from "../src/decode.js";
import { DecodeStepError } from "../src/errors.js";

const S320 = [3.0, 2.0, 0.0];

describe("decodeStep", () => {
  it("greedy puts all mass on the argmax, low index on ties", () => {
    expect([...decodeStep({ scores: S320, decoder: "greedy" }).probs]).toEqual([1, 0, 0]);
    expect([...decodeStep({ scores: [1, 1, 0], decoder: "greedy" }).probs]).toEqual([1, 0, 0]);
  });

  it("softmax matches the high-precision reference values", () => {
    const q = decodeStep({ scores: S320, decoder: "softmax", lambda: 1.0 }).probs;
    const expected = [0.70538451269824116, 0.25949646034241912, 0.035119026959339724];
    for (let i = 0; i < 3; i++) {
      expect(Math.abs(q[i] - expected[i])).toBeLessThan(1e-15);
    }
  });

  it("sparsemax zeroes the tail", () => {
    const q = decodeStep({ scores: S320, decoder: "sparsemax", lambda: 2.0 }).probs;
    expect(Math.abs(q[0] - 0.75)).toBeLessThan(1e-15);
    expect(Math.abs(q[1] - 0.25)).toBeLessThan(1e-15);
    expect(q[2]).toBe(0);
  });

  it("topp keeps the minimal nucleus", () => {
    const result = decodeStep({ scores: [2, 1, 0, -4], decoder: "topp", p: 0.8, lambda: 1.0 });
    expect(result.supportSize).toBeLessThan(4);
    expect(result.probs[3]).toBe(0);
  });

  it("topk restricts support to k tokens", () => {
    const result = decodeStep({ scores: S320, decoder: "topk", k: 2, lambda: 1.0 });
    expect(result.supportSize).toBe(2);
    expect(result.probs[2]).toBe(0);
  });

  it("coverage decoder runs the requested number of steps", () => {
    const result = decodeStep({
      scores: S320,
      decoder: "bok",
      lambda: 0.5,
      betaBar: 0.02,
      K: 8,
      steps: 5,
      eta: 0.5,
    });
    expect(result.solverIters).toBe(5);
    const total = [...result.probs].reduce((a, b) => a + b, 0);
    expect(Math.abs(total - 1)).toBeLessThan(1e-12);
  });

  it("samples deterministically when a seed is given", () => {
    const a = decodeStep({ scores: S320, decoder: "softmax", seed: 9, streamId: 2 });
    const b = decodeStep({ scores: S320, decoder: "softmax", seed: 9, streamId: 2 });
    expect(a.sampledIndex).toBe(b.sampledIndex);
    expect(a.sampledIndex).toBeGreaterThanOrEqual(0);
    expect(a.sampledIndex).toBeLessThan(3);
  });

  it("rejects invalid lambda with a stable code", () => {
    try {
      decodeStep({ scores: S320, decoder: "softmax", lambda: 0 });
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(DecodeStepError);
      expect((err as DecodeStepError).code).toBe("NonPositiveLambda");
    }
  });

  it("rejects non-finite and empty scores", () => {
    expect(() => decodeStep({ scores: [1, Infinity], decoder: "greedy" })).toThrow(
      DecodeStepError,
    );
    expect(() => decodeStep({ scores: [], decoder: "greedy" })).toThrow(DecodeStepError);
  });
});

describe("batchDecode", () => {
  it("maps an empty batch to an empty result", () => {
    expect(batchDecode([])).toEqual([]);
  });

  it("is equivalent to mapping decodeStep", () => {
    const requests = [
      { scores: S320, decoder: "greedy" as const },
      { scores: S320, decoder: "softmax" as const, lambda: 0.7 },
      { scores: S320, decoder: "sparsemax" as const, lambda: 2.0 },
    ];
    const batch = batchDecode(requests);
    requests.forEach((request, i) => {
      const item = batch[i];
      expect(item.ok).toBe(true);
      if (item.ok) {
        expect([...item.value.probs]).toEqual([...decodeStep(request).probs]);
      }
    });
  });

  it("reports mixed failures positionally", () => {
    const batch = batchDecode([
      { scores: S320, decoder: "softmax", lambda: 1.0 },
      { scores: S320, decoder: "softmax", lambda: -1.0 },
      { scores: [1.0, 2.0], decoder: "softmax", lambda: 1.0 },
      { scores: S320, decoder: "greedy" },
    ]);
    expect(batch.map((item) => item.ok)).toEqual([true, false, false, true]);
    expect(batch[1].ok === false && batch[1].code).toBe("NonPositiveLambda");
    expect(batch[2].ok === false && batch[2].code).toBe("InconsistentVocabSize");
  });
});
