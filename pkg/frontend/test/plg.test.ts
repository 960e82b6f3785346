import assert from 'node:assert/strict'
import { test } from 'node:test'

import { decodePlg, encodePlg, gridShape, HEADER_BYTES, LogitSet } from '../src/plg'

function sampleSet(): LogitSet {
  const logits = Float32Array.from([0.5, -0.5, 1.25, 2.0, -1.0, 0.0, 3.5, 0.125])
  return {
    nClasses: 2, height: 3, width: 3, patchHeight: 2, patchWidth: 2,
    strideH: 1, strideW: 1,
    images: [{ imageId: 7, label: 1, gridRows: 2, gridCols: 2, logits }],
  }
}

test('empty set encodes to a 40-byte header', () => {
  const buf = encodePlg({ nClasses: 3, height: 4, width: 4, patchHeight: 2,
                          patchWidth: 2, strideH: 1, strideW: 1, images: [] })
  assert.equal(buf.length, HEADER_BYTES)
  assert.equal(buf.toString('ascii', 0, 4), 'PLG1')
})

test('round-trip preserves every field and logit bit', () => {
  const set = sampleSet()
  const out = decodePlg(encodePlg(set))
  assert.equal(out.nClasses, 2)
  assert.equal(out.images.length, 1)
  assert.equal(out.images[0].imageId, 7)
  assert.equal(out.images[0].label, 1)
  assert.deepEqual(Array.from(out.images[0].logits),
                   Array.from(set.images[0].logits))
})

test('file size follows 40 + n*(16 + rows*cols*K*4)', () => {
  const set = sampleSet()
  assert.equal(encodePlg(set).length, 40 + 16 + 2 * 2 * 2 * 4)
})

test('label sentinel 0 means unlabeled', () => {
  const set = sampleSet()
  set.images[0].label = null
  const out = decodePlg(encodePlg(set))
  assert.equal(out.images[0].label, null)
})

test('grid shape uses floor stride division', () => {
  assert.deepEqual(gridShape(32, 32, 8, 8, 1, 1), [25, 25])
  assert.deepEqual(gridShape(32, 32, 8, 8, 4, 4), [7, 7])
  assert.deepEqual(gridShape(32, 32, 3, 3, 4, 4), [8, 8])
})

test('bad magic rejected', () => {
  const buf = encodePlg(sampleSet())
  buf.write('NOPE', 0, 'ascii')
  assert.throws(() => decodePlg(buf), /bad magic/)
})

test('every single-byte truncation rejected', () => {
  const buf = encodePlg(sampleSet())
  for (let cut = 0; cut < buf.length; cut++) {
    assert.throws(() => decodePlg(buf.subarray(0, cut)))
  }
})

test('trailing bytes rejected', () => {
  const buf = Buffer.concat([encodePlg(sampleSet()), Buffer.from([0])])
  assert.throws(() => decodePlg(buf), /trailing data/)
})

test('grid mismatch rejected on encode and decode', () => {
  const set = sampleSet()
  set.images[0].gridRows = 3
  assert.throws(() => encodePlg(set), /geometry mismatch/)
})

test('non-finite logits refused', () => {
  const set = sampleSet()
  set.images[0].logits[3] = Number.NaN
  assert.throws(() => encodePlg(set), /non-finite/)
})

test('duplicate image ids refused', () => {
  const set = sampleSet()
  set.images.push({ ...set.images[0] })
  assert.throws(() => encodePlg(set), /duplicate image_id/)
})
