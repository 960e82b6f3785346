/** Small residual CNN over fixed-size patches, emitting raw class logits.
 *
 * Deliberately normalization-free: batch-norm moving statistics cannot
 * converge within desk-scale step budgets, which splits training-mode and
 * inference-mode behavior. Plain He-initialized conv blocks with identity
 * shortcuts keep the exported logits identical to what training saw.
 */

import * as tf from '@tensorflow/tfjs'
import * as fs from 'fs'
import * as path from 'path'

function residualBlock(x: tf.SymbolicTensor, filters: number, stride: number,
                       nextSeed: () => number): tf.SymbolicTensor {
  const conv = (input: tf.SymbolicTensor, strides: number) =>
    tf.layers.conv2d({
      filters,
      kernelSize: 3,
      strides,
      padding: 'same',
      kernelInitializer: tf.initializers.heNormal({ seed: nextSeed() }),
    }).apply(input) as tf.SymbolicTensor

  let y = conv(x, stride)
  y = tf.layers.reLU().apply(y) as tf.SymbolicTensor
  y = conv(y, 1)

  let shortcut = x
  if (stride !== 1 || x.shape[x.shape.length - 1] !== filters) {
    shortcut = tf.layers.conv2d({
      filters,
      kernelSize: 1,
      strides: stride,
      padding: 'same',
      kernelInitializer: tf.initializers.heNormal({ seed: nextSeed() }),
    }).apply(x) as tf.SymbolicTensor
  }
  const sum = tf.layers.add().apply([y, shortcut]) as tf.SymbolicTensor
  return tf.layers.reLU().apply(sum) as tf.SymbolicTensor
}

/** Stem conv, two residual stages, global pooling, linear head (logits).
 * `width` is the stem filter count; the second stage doubles it. */
export function buildModel(patchSize: number, channels: number,
                           nClasses: number, seed: number,
                           width = 16): tf.LayersModel {
  let counter = seed
  const nextSeed = () => ++counter
  const input = tf.input({ shape: [patchSize, patchSize, channels] })
  let x = tf.layers.conv2d({
    filters: width,
    kernelSize: 3,
    padding: 'same',
    kernelInitializer: tf.initializers.heNormal({ seed: nextSeed() }),
  }).apply(input) as tf.SymbolicTensor
  x = tf.layers.reLU().apply(x) as tf.SymbolicTensor
  x = residualBlock(x, width, 1, nextSeed)
  x = residualBlock(x, 2 * width, 2, nextSeed)
  x = tf.layers.globalAveragePooling2d({}).apply(x) as tf.SymbolicTensor
  const logits = tf.layers.dense({
    units: nClasses,
    kernelInitializer: tf.initializers.glorotUniform({ seed: nextSeed() }),
  }).apply(x) as tf.SymbolicTensor
  return tf.model({ inputs: input, outputs: logits })
}

/** Persist topology + weights without a registered file:// IO handler. */
export async function saveModel(model: tf.LayersModel, dir: string): Promise<void> {
  fs.mkdirSync(dir, { recursive: true })
  await model.save(tf.io.withSaveHandler(async artifacts => {
    const manifest = {
      modelTopology: artifacts.modelTopology,
      weightSpecs: artifacts.weightSpecs,
      format: artifacts.format,
    }
    fs.writeFileSync(path.join(dir, 'model.json'), JSON.stringify(manifest))
    fs.writeFileSync(path.join(dir, 'weights.bin'),
                     Buffer.from(artifacts.weightData as ArrayBuffer))
    return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: 'JSON' } }
  }))
}

export async function loadModel(dir: string): Promise<tf.LayersModel> {
  const manifestPath = path.join(dir, 'model.json')
  if (!fs.existsSync(manifestPath)) {
    throw new Error(`no checkpoint at ${dir} (expected model.json + weights.bin)`)
  }
  const manifest = JSON.parse(fs.readFileSync(manifestPath, 'utf-8'))
  const weights = fs.readFileSync(path.join(dir, 'weights.bin'))
  return tf.loadLayersModel(tf.io.fromMemory({
    modelTopology: manifest.modelTopology,
    weightSpecs: manifest.weightSpecs,
    weightData: weights.buffer.slice(weights.byteOffset,
                                     weights.byteOffset + weights.byteLength),
  }))
}
