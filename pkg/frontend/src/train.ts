/** Patch-crop training: one uniformly random patch per image per batch,
 * labeled with the parent image's class. */

import * as tf from '@tensorflow/tfjs'

import { Dataset } from './data'
import { cropPatch } from './grid'
import { buildModel } from './model'
import { Rng } from './rng'

export interface TrainConfig {
  patchSize: number
  epochs: number
  batchSize: number
  learningRate: number
  seed: number
  /** stem filter count of the model (default 16) */
  width?: number
  /** skip the per-epoch accuracy measurements (stats carry loss only) */
  lossOnlyStats?: boolean
}

export interface EpochStats {
  epoch: number
  trainAcc: number
  testAcc: number
  meanLoss: number
}

function batchTensor(dataset: Dataset, indices: number[], patchSize: number,
                     rng: Rng): { x: tf.Tensor4D; y: tf.Tensor1D } {
  const { images, labels, height, width, channels } = dataset
  const n = indices.length
  const flat = new Float32Array(n * patchSize * patchSize * channels)
  const ys = new Int32Array(n)
  for (let b = 0; b < n; b++) {
    const i = indices[b]
    const top = rng.int(height - patchSize + 1)
    const left = rng.int(width - patchSize + 1)
    flat.set(cropPatch(images[i], height, width, channels, top, left,
                       patchSize, patchSize),
             b * patchSize * patchSize * channels)
    ys[b] = labels[i]
  }
  return {
    x: tf.tensor4d(flat, [n, patchSize, patchSize, channels]),
    y: tf.tensor1d(ys, 'int32'),
  }
}

/** Accuracy of single random patches (one per image), in percent. */
export function singlePatchAccuracy(model: tf.LayersModel, dataset: Dataset,
                                    patchSize: number, seed: number,
                                    sampleLimit = 1000): number {
  const rng = new Rng(seed)
  const n = Math.min(dataset.images.length, sampleLimit)
  const indices = Array.from({ length: n }, (_, i) => i)
  const { x, y } = batchTensor(dataset, indices, patchSize, rng)
  const predictions = tf.tidy(() =>
    (model.predict(x, { batchSize: 256 }) as tf.Tensor2D).argMax(1))
  const predicted = predictions.dataSync()
  const truth = y.dataSync()
  x.dispose(); y.dispose(); predictions.dispose()
  let correct = 0
  for (let i = 0; i < n; i++) correct += predicted[i] === truth[i] ? 1 : 0
  return 100 * correct / n
}

export async function trainPatchModel(
    trainSet: Dataset, testSet: Dataset | null, config: TrainConfig,
    onEpoch?: (stats: EpochStats) => void): Promise<tf.LayersModel> {
  if (trainSet.images.length === 0) throw new Error('training set is empty')
  if (config.patchSize > Math.min(trainSet.height, trainSet.width)) {
    throw new Error(`patch ${config.patchSize} exceeds image ` +
                    `${trainSet.height}x${trainSet.width}`)
  }
  const model = buildModel(config.patchSize, trainSet.channels,
                           trainSet.nClasses, config.seed,
                           config.width ?? 16)
  const optimizer = tf.train.adam(config.learningRate)
  const lossFn = (labels: tf.Tensor1D, logits: tf.Tensor2D) =>
    tf.losses.softmaxCrossEntropy(
      tf.oneHot(labels, trainSet.nClasses), logits)

  const rng = new Rng(config.seed + 1)
  const order = Array.from({ length: trainSet.images.length }, (_, i) => i)
  for (let epoch = 1; epoch <= config.epochs; epoch++) {
    rng.shuffle(order)
    let lossSum = 0
    let batches = 0
    for (let start = 0; start < order.length; start += config.batchSize) {
      const indices = order.slice(start, start + config.batchSize)
      const { x, y } = batchTensor(trainSet, indices, config.patchSize, rng)
      const loss = optimizer.minimize(
        () => lossFn(y, model.apply(x, { training: true }) as tf.Tensor2D) as
          tf.Scalar,
        true) as tf.Scalar
      lossSum += loss.dataSync()[0]
      batches += 1
      loss.dispose(); x.dispose(); y.dispose()
    }
    if (onEpoch) {
      const meanLoss = lossSum / Math.max(1, batches)
      if (config.lossOnlyStats) {
        onEpoch({ epoch, meanLoss, trainAcc: NaN, testAcc: NaN })
      } else {
        onEpoch({
          epoch,
          meanLoss,
          trainAcc: singlePatchAccuracy(model, trainSet, config.patchSize,
                                        config.seed + 1000 + epoch),
          testAcc: testSet === null ? NaN :
            singlePatchAccuracy(model, testSet, config.patchSize,
                                config.seed + 2000 + epoch),
        })
      }
    }
    await tf.nextFrame()
  }
  optimizer.dispose()
  return model
}

export function trainingLogCsv(stats: EpochStats[]): string {
  const lines = ['epoch,train_acc,test_acc']
  for (const s of stats) {
    const test = Number.isNaN(s.testAcc) ? '' : s.testAcc.toPrecision(9)
    lines.push(`${s.epoch},${s.trainAcc.toPrecision(9)},${test}`)
  }
  return lines.join('\n') + '\n'
}
