/** Command line:
 *
 *   train  --data DIR [--limit 10000 --patch 8 --epochs 10 --batch 128
 *           --lr 0.001 --seed 0 --model-dir models/patch8 --log train.csv]
 *   export --model-dir DIR (--data DIR --split test | --synthetic N)
 *           [--patch 8 --stride 1 --limit 500] --out logits.plg
 *   demo   --out logits.plg  (synthetic end-to-end, no dataset required)
 *
 * Exit codes: 0 success, 1 usage error, 2 runtime error.
 */

import * as fs from 'fs'

import { initBackend } from './backend'
import { Dataset, loadCifar10, syntheticDataset } from './data'
import { exportLogits, patchAverageAccuracy } from './export'
import { loadModel, saveModel } from './model'
import { writePlg } from './plg'
import { EpochStats, trainingLogCsv, trainPatchModel } from './train'

interface Flags { [name: string]: string }

function parseFlags(argv: string[]): Flags {
  const flags: Flags = {}
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith('--') || i + 1 >= argv.length) {
      throw new UsageError(`malformed flag pair near ${argv[i]}`)
    }
    flags[argv[i].slice(2)] = argv[i + 1]
  }
  return flags
}

class UsageError extends Error {}

function num(flags: Flags, name: string, fallback: number): number {
  if (!(name in flags)) return fallback
  const value = Number(flags[name])
  if (!Number.isFinite(value)) throw new UsageError(`--${name}: not a number`)
  return value
}

function need(flags: Flags, name: string): string {
  if (!(name in flags)) throw new UsageError(`missing --${name}`)
  return flags[name]
}

async function cmdTrain(flags: Flags): Promise<void> {
  const dataDir = need(flags, 'data')
  const limit = num(flags, 'limit', 10000)
  const patch = num(flags, 'patch', 8)
  const config = {
    patchSize: patch,
    epochs: num(flags, 'epochs', 10),
    batchSize: num(flags, 'batch', 128),
    learningRate: num(flags, 'lr', 0.001),
    seed: num(flags, 'seed', 0),
    width: num(flags, 'width', 16),
  }
  const trainSet = loadCifar10(dataDir, 'train', limit)
  const testSet = loadCifar10(dataDir, 'test', Math.min(limit, 2000))
  console.log(`training on ${trainSet.images.length} images, patch ${patch}, ` +
              `${config.epochs} epochs`)
  const stats: EpochStats[] = []
  const model = await trainPatchModel(trainSet, testSet, config, s => {
    stats.push(s)
    console.log(`epoch ${s.epoch}: loss ${s.meanLoss.toFixed(4)} ` +
                `train-patch-acc ${s.trainAcc.toFixed(1)}% ` +
                `test-patch-acc ${s.testAcc.toFixed(1)}%`)
  })
  const modelDir = flags['model-dir'] ?? 'models/latest'
  await saveModel(model, modelDir)
  console.log(`saved checkpoint to ${modelDir}`)
  if (flags['log']) {
    fs.writeFileSync(flags['log'], trainingLogCsv(stats))
    console.log(`wrote training log to ${flags['log']}`)
  }
}

async function cmdExport(flags: Flags): Promise<void> {
  const out = need(flags, 'out')
  const patch = num(flags, 'patch', 8)
  const stride = num(flags, 'stride', 1)
  let dataset: Dataset
  if ('synthetic' in flags) {
    dataset = syntheticDataset(num(flags, 'synthetic', 50), 10, 32, 32,
                               num(flags, 'seed', 0))
  } else {
    const split = (flags['split'] ?? 'test') as 'train' | 'test'
    dataset = loadCifar10(need(flags, 'data'), split,
                          num(flags, 'limit', 500))
  }
  const model = await loadModel(need(flags, 'model-dir'))
  const set = await exportLogits(model, dataset, patch, stride)
  const bytes = writePlg(set, out)
  console.log(`wrote ${bytes} bytes (${set.images.length} images, ` +
              `${set.images[0]?.gridRows ?? 0}x${set.images[0]?.gridCols ?? 0} grid) to ${out}`)
  console.log(`patch_avg_accuracy=${patchAverageAccuracy(set).toPrecision(9)}`)
}

async function cmdDemo(flags: Flags): Promise<void> {
  const out = need(flags, 'out')
  const seed = num(flags, 'seed', 0)
  const trainSet = syntheticDataset(320, 4, 12, 12, seed)
  const testSet = syntheticDataset(50, 4, 12, 12, seed + 1)
  const model = await trainPatchModel(trainSet, testSet, {
    patchSize: 6, epochs: num(flags, 'epochs', 4), batchSize: 32,
    learningRate: 0.02, seed, width: 8,
  }, s => console.log(`epoch ${s.epoch}: loss ${s.meanLoss.toFixed(4)} ` +
                      `test-patch-acc ${s.testAcc.toFixed(1)}%`))
  const set = await exportLogits(model, testSet, 6, 1)
  writePlg(set, out)
  console.log(`wrote ${out}`)
  console.log(`patch_avg_accuracy=${patchAverageAccuracy(set).toPrecision(9)}`)
}

async function main(): Promise<number> {
  const [command, ...rest] = process.argv.slice(2)
  try {
    console.log(`tfjs backend: ${await initBackend()}`)
    const flags = parseFlags(rest)
    if (command === 'train') await cmdTrain(flags)
    else if (command === 'export') await cmdExport(flags)
    else if (command === 'demo') await cmdDemo(flags)
    else throw new UsageError(`unknown command ${command ?? '(none)'}; ` +
                              `expected train | export | demo`)
    return 0
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`usage error: ${err.message}`)
      return 1
    }
    console.error(`error: ${(err as Error).message}`)
    return 2
  }
}

main().then(code => { process.exitCode = code })
