/**
 * Philox4x64-10 counter-based generator, keyed directly with
 * (seed, streamId). The 256-bit counter starts at zero and advances
 * before each block; uniform doubles are (u64 >> 11) * 2^-53.
 *
 * This matches the primary package's stream contract word for word, so
 * sampled token indices agree bit-exactly across the boundary.
 */

const MASK64 = (1n << 64n) - 1n;
const M0 = 0xd2e7470ee14c6c93n;
const M1 = 0xca5a826395121157n;
const W0 = 0x9e3779b97f4a7c15n;
const W1 = 0xbb67ae8584caa73bn;

function mulHiLo(a: bigint, b: bigint): [bigint, bigint] {
  const p = a * b;
  return [(p >> 64n) & MASK64, p & MASK64];
}

function philoxRounds(ctr: bigint[], key: bigint[]): bigint[] {
  let [c0, c1, c2, c3] = ctr;
  let [k0, k1] = key;
  for (let i = 0; i < 10; i++) {
    if (i !== 0) {
      k0 = (k0 + W0) & MASK64;
      k1 = (k1 + W1) & MASK64;
    }
    const [hi0, lo0] = mulHiLo(M0, c0);
    const [hi1, lo1] = mulHiLo(M1, c2);
    c0 = hi1 ^ c1 ^ k0;
    c1 = lo1;
    c2 = hi0 ^ c3 ^ k1;
    c3 = lo0;
  }
  return [c0, c1, c2, c3];
}

export function toUint64(value: number | bigint, what: string): bigint {
  const big = typeof value === "bigint" ? value : BigInt(Math.trunc(value));
  if (big < 0n || big > MASK64) {
    throw new RangeError(`${what} must be an unsigned 64-bit integer`);
  }
  return big;
}

export class PhiloxStream {
  private readonly key: bigint[];
  private readonly counter: bigint[] = [0n, 0n, 0n, 0n];
  private buffer: bigint[] = [];

  constructor(seed: number | bigint, streamId: number | bigint = 0) {
    this.key = [toUint64(seed, "seed"), toUint64(streamId, "streamId")];
  }

  nextUint64(): bigint {
    if (this.buffer.length === 0) {
      for (let i = 0; i < 4; i++) {
        this.counter[i] = (this.counter[i] + 1n) & MASK64;
        if (this.counter[i] !== 0n) break;
      }
      this.buffer = philoxRounds(this.counter, this.key);
    }
    return this.buffer.shift()!;
  }

  /** Uniform double in [0, 1) with the standard 53-bit mantissa rule. */
  nextDouble(): number {
    return Number(this.nextUint64() >> 11n) * 2 ** -53;
  }
}
