/** Dataset loading: CIFAR-10 binary batches and a synthetic fixture task.
 *
 * Images are row-major HWC Float32Arrays scaled to [0, 1].
 */

import * as fs from 'fs'
import * as path from 'path'

import { Rng } from './rng'

export interface Dataset {
  images: Float32Array[]
  labels: Uint8Array
  height: number
  width: number
  channels: number
  nClasses: number
}

const CIFAR_DIR = 'cifar-10-batches-bin'
const CIFAR_SIDE = 32
const CIFAR_CHANNELS = 3
const CIFAR_RECORD = 1 + CIFAR_SIDE * CIFAR_SIDE * CIFAR_CHANNELS

export const FETCH_INSTRUCTIONS =
  'CIFAR-10 binary batches not found. Fetch them once with:\n' +
  '  bash scripts/fetch-cifar10.sh <data-dir>\n' +
  '(downloads cifar-10-binary.tar.gz from www.cs.toronto.edu and unpacks ' +
  `${CIFAR_DIR}/ into <data-dir>)`

/** Load CIFAR-10 records from the standard binary batches.
 *
 * The on-disk layout is planar (1024 R, 1024 G, 1024 B per record); pixels
 * come back interleaved HWC in [0, 1].
 */
export function loadCifar10(dataDir: string, split: 'train' | 'test',
                            limit?: number): Dataset {
  const base = path.join(dataDir, CIFAR_DIR)
  const files = split === 'train'
    ? ['data_batch_1.bin', 'data_batch_2.bin', 'data_batch_3.bin',
       'data_batch_4.bin', 'data_batch_5.bin']
    : ['test_batch.bin']
  const images: Float32Array[] = []
  const labels: number[] = []
  const pixelsPerChannel = CIFAR_SIDE * CIFAR_SIDE
  for (const name of files) {
    const file = path.join(base, name)
    if (!fs.existsSync(file)) {
      throw new Error(`${file} is missing. ${FETCH_INSTRUCTIONS}`)
    }
    const raw = fs.readFileSync(file)
    if (raw.length % CIFAR_RECORD !== 0) {
      throw new Error(`${file}: size ${raw.length} is not a multiple of ${CIFAR_RECORD}`)
    }
    const records = raw.length / CIFAR_RECORD
    for (let r = 0; r < records; r++) {
      if (limit !== undefined && images.length >= limit) break
      const start = r * CIFAR_RECORD
      labels.push(raw[start])
      const pixels = new Float32Array(pixelsPerChannel * CIFAR_CHANNELS)
      for (let p = 0; p < pixelsPerChannel; p++) {
        for (let ch = 0; ch < CIFAR_CHANNELS; ch++) {
          pixels[p * CIFAR_CHANNELS + ch] =
            raw[start + 1 + ch * pixelsPerChannel + p] / 255
        }
      }
      images.push(pixels)
    }
    if (limit !== undefined && images.length >= limit) break
  }
  return { images, labels: Uint8Array.from(labels), height: CIFAR_SIDE,
           width: CIFAR_SIDE, channels: CIFAR_CHANNELS, nClasses: 10 }
}

/** Synthetic stand-in task for tests and dataset-free demos: each class is
 * a distinct mean color with pixel noise, so a small CNN separates it
 * quickly. Deterministic for a given seed. */
export function syntheticDataset(count: number, nClasses: number, height: number,
                                 width: number, seed: number): Dataset {
  const channels = 3
  const rng = new Rng(seed)
  const images: Float32Array[] = []
  const labels = new Uint8Array(count)
  for (let i = 0; i < count; i++) {
    const label = rng.int(nClasses)
    labels[i] = label
    const mean = (label + 1) / (nClasses + 1)
    const pixels = new Float32Array(height * width * channels)
    for (let j = 0; j < pixels.length; j++) {
      const v = rng.normal(mean, 0.1)
      pixels[j] = Math.min(1, Math.max(0, v))
    }
    images.push(pixels)
  }
  return { images, labels, height, width, channels, nClasses }
}
