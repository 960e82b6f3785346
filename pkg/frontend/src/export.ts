/** Stride-controlled per-patch logit export and patch-averaged accuracy.
 *
 * The averaging here mirrors the consumer's reduction exactly (float64
 * pairwise fold over grid cells in row-major order, argmax with
 * lowest-index tie-break), so accuracies computed on either side of a
 * PLG1 file agree to the last bit.
 */

import * as tf from '@tensorflow/tfjs'

import { Dataset } from './data'
import { cropPatch, gridPositions } from './grid'
import { gridShape, ImageLogits, LogitSet } from './plg'

export async function exportLogits(model: tf.LayersModel, dataset: Dataset,
                                   patchSize: number,
                                   stride: number): Promise<LogitSet> {
  const { height, width, channels, nClasses } = dataset
  const [rows, cols] = gridShape(height, width, patchSize, patchSize,
                                 stride, stride)
  const positions = gridPositions(height, width, patchSize, patchSize,
                                  stride, stride)
  const images: ImageLogits[] = []
  for (let i = 0; i < dataset.images.length; i++) {
    const flat = new Float32Array(positions.length * patchSize * patchSize * channels)
    positions.forEach(([top, left], p) => {
      flat.set(cropPatch(dataset.images[i], height, width, channels, top, left,
                         patchSize, patchSize),
               p * patchSize * patchSize * channels)
    })
    const x = tf.tensor4d(flat, [positions.length, patchSize, patchSize, channels])
    const out = model.predict(x, { batchSize: 256 }) as tf.Tensor2D
    const logits = new Float32Array(await out.data())
    x.dispose(); out.dispose()
    images.push({
      imageId: i,
      label: dataset.labels[i],
      gridRows: rows,
      gridCols: cols,
      logits,
    })
  }
  return { nClasses, height, width, patchHeight: patchSize,
           patchWidth: patchSize, strideH: stride, strideW: stride, images }
}

/** Float64 mean logits via a row-major pairwise fold over grid cells. */
export function pairwiseMeanLogits(entry: ImageLogits, nClasses: number): Float64Array {
  const cells = entry.gridRows * entry.gridCols
  let rows: Float64Array[] = []
  for (let c = 0; c < cells; c++) {
    const row = new Float64Array(nClasses)
    for (let k = 0; k < nClasses; k++) row[k] = entry.logits[c * nClasses + k]
    rows.push(row)
  }
  while (rows.length > 1) {
    const paired: Float64Array[] = []
    const half = 2 * Math.floor(rows.length / 2)
    for (let i = 0; i < half; i += 2) {
      const sum = new Float64Array(nClasses)
      for (let k = 0; k < nClasses; k++) sum[k] = rows[i][k] + rows[i + 1][k]
      paired.push(sum)
    }
    if (rows.length % 2 === 1) paired.push(rows[rows.length - 1])
    rows = paired
  }
  const mean = rows[0]
  for (let k = 0; k < nClasses; k++) mean[k] /= cells
  return mean
}

export function predictedClass(entry: ImageLogits, nClasses: number): number {
  const mean = pairwiseMeanLogits(entry, nClasses)
  let best = 0
  for (let k = 1; k < nClasses; k++) {
    if (mean[k] > mean[best]) best = k
  }
  return best
}

/** Percent of images whose averaged-logit argmax matches the label. */
export function patchAverageAccuracy(set: LogitSet): number {
  if (set.images.length === 0) throw new Error('logit set holds no images')
  let correct = 0
  for (const entry of set.images) {
    if (entry.label === null) throw new Error(`image ${entry.imageId} has no label`)
    correct += predictedClass(entry, set.nClasses) === entry.label ? 1 : 0
  }
  return 100 * correct / set.images.length
}
