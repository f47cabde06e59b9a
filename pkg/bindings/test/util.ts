/** Deterministic test-signal generation shared by the binding tests. */

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function gaussian(rand: () => number): () => number {
  return () => {
    const u = Math.max(rand(), 1e-12);
    const v = rand();
    return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
  };
}

export interface Triple {
  est: Float64Array;
  clean: Float64Array;
  noise: Float64Array;
}

export function randomTriple(seed: number, length: number): Triple {
  const g = gaussian(mulberry32(seed));
  const clean = new Float64Array(length);
  const noise = new Float64Array(length);
  const est = new Float64Array(length);
  for (let i = 0; i < length; i++) {
    clean[i] = g();
    noise[i] = g();
    est[i] = clean[i] + 0.5 * noise[i] + 0.3 * g();
  }
  return { est, clean, noise };
}
