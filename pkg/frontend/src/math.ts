/** Float64 helpers kept op-for-op close to the primary implementation. */

/** Neumaier compensated sum (stands in for exactly-rounded summation). */
export function sum(values: ArrayLike<number>): number {
  let total = 0.0;
  let comp = 0.0;
  for (let i = 0; i < values.length; i++) {
    const x = values[i];
    const t = total + x;
    if (Math.abs(total) >= Math.abs(x)) {
      comp += total - t + x;
    } else {
      comp += x - t + total;
    }
    total = t;
  }
  return total + comp;
}

/** Indices ordered by descending value, ties by ascending index. */
export function argsortDescStable(values: ArrayLike<number>): number[] {
  const idx = Array.from({ length: values.length }, (_, i) => i);
  idx.sort((a, b) => {
    if (values[a] !== values[b]) return values[b] - values[a];
    return a - b;
  });
  return idx;
}

/** Sequential running sums, like a plain cumulative-sum loop. */
export function cumsum(values: ArrayLike<number>): Float64Array {
  const out = new Float64Array(values.length);
  let acc = 0.0;
  for (let i = 0; i < values.length; i++) {
    acc += values[i];
    out[i] = acc;
  }
  return out;
}

/**
 * Kahan running sum of q with the last cell pinned to 1, the exact
 * operation sequence of the primary's compensated CDF.
 */
export function kahanCdf(q: ArrayLike<number>): Float64Array {
  const out = new Float64Array(q.length);
  let total = 0.0;
  let comp = 0.0;
  for (let i = 0; i < q.length; i++) {
    const y = q[i] - comp;
    const t = total + y;
    comp = t - total - y;
    total = t;
    out[i] = total;
  }
  out[out.length - 1] = 1.0;
  return out;
}

/** First index i with arr[i] >= v (arr ascending). */
export function searchsortedLeft(arr: ArrayLike<number>, v: number): number {
  let lo = 0;
  let hi = arr.length;
  while (lo < hi) {
    const mid = (lo + hi) >>> 1;
    if (arr[mid] < v) lo = mid + 1;
    else hi = mid;
  }
  return lo;
}

/** First index i with arr[i] > v (arr ascending). */
export function searchsortedRight(arr: ArrayLike<number>, v: number): number {
  let lo = 0;
  let hi = arr.length;
  while (lo < hi) {
    const mid = (lo + hi) >>> 1;
    if (arr[mid] <= v) lo = mid + 1;
    else hi = mid;
  }
  return lo;
}

export function maxOf(values: ArrayLike<number>): number {
  let m = -Infinity;
  for (let i = 0; i < values.length; i++) {
    if (values[i] > m) m = values[i];
  }
  return m;
}

export function allFinite(values: ArrayLike<number>): boolean {
  for (let i = 0; i < values.length; i++) {
    if (!Number.isFinite(values[i])) return false;
  }
  return true;
}
