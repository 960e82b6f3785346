/** Cross-component check: logits exported here must be readable by the
 * Python toolkit, and patch-averaged accuracy must agree exactly on both
 * sides of the PLG1 file. Requires the `patchbound` CLI on PATH; skipped
 * otherwise.
 */

import assert from 'node:assert/strict'
import { test } from 'node:test'
import { spawnSync } from 'node:child_process'
import * as fs from 'fs'
import * as os from 'os'
import * as path from 'path'

import { initBackend } from '../src/backend'
import { syntheticDataset } from '../src/data'
import { exportLogits, patchAverageAccuracy, predictedClass } from '../src/export'
import { writePlg } from '../src/plg'
import { trainPatchModel } from '../src/train'

function cliAvailable(): boolean {
  const probe = spawnSync('patchbound', ['--help'], { encoding: 'utf-8' })
  return probe.status === 0
}

test('primary toolkit validates and reproduces the exported accuracy',
     { skip: !cliAvailable() }, async () => {
  await initBackend()
  const trainSet = syntheticDataset(200, 4, 12, 12, 0)
  const testSet = syntheticDataset(50, 4, 12, 12, 1)
  const model = await trainPatchModel(trainSet, null, {
    patchSize: 6, epochs: 2, batchSize: 64, learningRate: 0.02, seed: 0,
    width: 8, lossOnlyStats: true,
  })
  const set = await exportLogits(model, testSet, 6, 1)
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'plg-'))
  const plgPath = path.join(dir, 'export.plg')
  writePlg(set, plgPath)

  const ours = patchAverageAccuracy(set)
  const predsPath = path.join(dir, 'preds.csv')
  const run = spawnSync('patchbound',
                        ['aggregate', '--logits', plgPath, '--out', predsPath],
                        { encoding: 'utf-8' })
  assert.equal(run.status, 0, run.stderr)

  const line = run.stdout.trim().split('\n').find(
    l => l.startsWith('patchwise_accuracy_percent,'))
  assert.ok(line, `missing accuracy line in: ${run.stdout}`)
  const theirs = Number(line!.split(',')[1])
  assert.equal(theirs, ours)

  // per-image predictions must match as well
  const rows = fs.readFileSync(predsPath, 'utf-8').trim().split('\n').slice(1)
  assert.equal(rows.length, set.images.length)
  for (const row of rows) {
    const [imageId, , predicted] = row.split(',')
    const entry = set.images[Number(imageId)]
    assert.equal(Number(predicted), predictedClass(entry, set.nClasses))
  }
})

test('heat-map rendering accepts the exported file',
     { skip: !cliAvailable() }, async () => {
  await initBackend()
  const testSet = syntheticDataset(2, 4, 12, 12, 3)
  const model = await trainPatchModel(syntheticDataset(64, 4, 12, 12, 2), null, {
    patchSize: 6, epochs: 1, batchSize: 32, learningRate: 0.02, seed: 2,
    width: 8, lossOnlyStats: true,
  })
  const set = await exportLogits(model, testSet, 6, 1)
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'plg-'))
  const plgPath = path.join(dir, 'export.plg')
  const pgmPath = path.join(dir, 'map.pgm')
  writePlg(set, plgPath)
  const run = spawnSync('patchbound',
                        ['heatmap', '--logits', plgPath, '--image', '0',
                         '--class', '1', '--out', pgmPath],
                        { encoding: 'utf-8' })
  assert.equal(run.status, 0, run.stderr)
  const pgm = fs.readFileSync(pgmPath)
  assert.ok(pgm.subarray(0, 12).toString('ascii').startsWith('P5\n12 12\n255'))
})
