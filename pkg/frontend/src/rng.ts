/** Small deterministic PRNG (mulberry32) so crops, shuffles and synthetic
 * data reproduce bit-for-bit for a given seed. */
export class Rng {
  private state: number

  constructor(seed: number) {
    this.state = seed >>> 0
  }

  /** Uniform float in [0, 1). */
  next(): number {
    this.state = (this.state + 0x6d2b79f5) >>> 0
    let t = this.state
    t = Math.imul(t ^ (t >>> 15), t | 1)
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61)
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }

  /** Uniform integer in [0, bound). */
  int(bound: number): number {
    return Math.floor(this.next() * bound)
  }

  /** Approximately normal via sum of uniforms (Irwin-Hall, n=12). */
  normal(mean: number, std: number): number {
    let s = 0
    for (let i = 0; i < 12; i++) s += this.next()
    return mean + std * (s - 6)
  }

  /** In-place Fisher-Yates shuffle of an index array. */
  shuffle(indices: number[]): void {
    for (let i = indices.length - 1; i > 0; i--) {
      const j = this.int(i + 1)
      const tmp = indices[i]
      indices[i] = indices[j]
      indices[j] = tmp
    }
  }
}
