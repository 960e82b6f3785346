/** PLG1 binary format: per-patch, per-class logits.
 *
 * Layout (all integers u32 little-endian, logits f32 little-endian):
 *   "PLG1" | n_images K H W H_T W_T S_H S_W reserved(=0)
 *   per image: image_id grid_rows grid_cols label+1(0=absent)
 *              then grid_rows*grid_cols*K floats, row-major, class fastest
 *
 * The header is 40 bytes. Every image's declared grid must match the grid
 * the header geometry implies (floor stride division); logits must be
 * finite; image ids must be unique.
 */

import * as fs from 'fs'

export interface ImageLogits {
  imageId: number
  label: number | null
  gridRows: number
  gridCols: number
  /** length gridRows * gridCols * nClasses, row-major, class fastest */
  logits: Float32Array
}

export interface LogitSet {
  nClasses: number
  height: number
  width: number
  patchHeight: number
  patchWidth: number
  strideH: number
  strideW: number
  images: ImageLogits[]
}

export const HEADER_BYTES = 40

export function gridShape(height: number, width: number, patchHeight: number,
                          patchWidth: number, strideH: number,
                          strideW: number): [number, number] {
  if (patchHeight < 1 || patchHeight > height || patchWidth < 1 || patchWidth > width) {
    throw new Error(`patch ${patchHeight}x${patchWidth} exceeds image ${height}x${width}`)
  }
  if (strideH < 1 || strideW < 1) {
    throw new Error(`strides must be >= 1, got (${strideH}, ${strideW})`)
  }
  return [Math.floor((height - patchHeight) / strideH) + 1,
          Math.floor((width - patchWidth) / strideW) + 1]
}

function validate(set: LogitSet): void {
  if (set.nClasses < 1) throw new Error(`nClasses must be >= 1, got ${set.nClasses}`)
  const [rows, cols] = gridShape(set.height, set.width, set.patchHeight,
                                 set.patchWidth, set.strideH, set.strideW)
  const seen = new Set<number>()
  for (const image of set.images) {
    if (seen.has(image.imageId)) throw new Error(`duplicate image_id ${image.imageId}`)
    seen.add(image.imageId)
    if (image.gridRows !== rows || image.gridCols !== cols) {
      throw new Error(`geometry mismatch: image ${image.imageId} declares grid ` +
                      `${image.gridRows}x${image.gridCols}, geometry implies ${rows}x${cols}`)
    }
    if (image.logits.length !== rows * cols * set.nClasses) {
      throw new Error(`image ${image.imageId}: logits length ${image.logits.length} ` +
                      `does not match ${rows}x${cols}x${set.nClasses}`)
    }
    for (let i = 0; i < image.logits.length; i++) {
      if (!Number.isFinite(image.logits[i])) {
        throw new Error(`non-finite logit in image ${image.imageId}`)
      }
    }
    if (image.label !== null && (image.label < 0 || image.label >= set.nClasses)) {
      throw new Error(`image ${image.imageId}: label ${image.label} out of range`)
    }
  }
}

export function encodePlg(set: LogitSet): Buffer {
  validate(set)
  let size = HEADER_BYTES
  for (const image of set.images) size += 16 + image.logits.length * 4
  const buf = Buffer.alloc(size)
  buf.write('PLG1', 0, 'ascii')
  const header = [set.images.length, set.nClasses, set.height, set.width,
                  set.patchHeight, set.patchWidth, set.strideH, set.strideW, 0]
  header.forEach((v, i) => buf.writeUInt32LE(v, 4 + 4 * i))
  let offset = HEADER_BYTES
  for (const image of set.images) {
    buf.writeUInt32LE(image.imageId, offset)
    buf.writeUInt32LE(image.gridRows, offset + 4)
    buf.writeUInt32LE(image.gridCols, offset + 8)
    buf.writeUInt32LE(image.label === null ? 0 : image.label + 1, offset + 12)
    offset += 16
    for (let i = 0; i < image.logits.length; i++) {
      buf.writeFloatLE(image.logits[i], offset)
      offset += 4
    }
  }
  return buf
}

export function decodePlg(data: Buffer): LogitSet {
  if (data.length < 4 || data.toString('ascii', 0, 4) !== 'PLG1') {
    throw new Error('bad magic')
  }
  if (data.length < HEADER_BYTES) throw new Error('truncated header')
  const u32 = (offset: number) => data.readUInt32LE(offset)
  const [nImages, nClasses, height, width, patchHeight, patchWidth,
         strideH, strideW, reserved] =
    [0, 1, 2, 3, 4, 5, 6, 7, 8].map(i => u32(4 + 4 * i))
  if (reserved !== 0) throw new Error(`reserved field must be 0, got ${reserved}`)
  const [rows, cols] = gridShape(height, width, patchHeight, patchWidth,
                                 strideH, strideW)
  const images: ImageLogits[] = []
  let offset = HEADER_BYTES
  for (let i = 0; i < nImages; i++) {
    if (offset + 16 > data.length) throw new Error(`truncated at image ${i} header`)
    const imageId = u32(offset)
    const gridRows = u32(offset + 4)
    const gridCols = u32(offset + 8)
    const labelField = u32(offset + 12)
    offset += 16
    if (gridRows !== rows || gridCols !== cols) {
      throw new Error(`geometry mismatch: image ${imageId} declares grid ` +
                      `${gridRows}x${gridCols}, geometry implies ${rows}x${cols}`)
    }
    const count = gridRows * gridCols * nClasses
    if (offset + 4 * count > data.length) throw new Error(`truncated at image ${i} logits`)
    const logits = new Float32Array(count)
    for (let j = 0; j < count; j++) {
      logits[j] = data.readFloatLE(offset)
      offset += 4
    }
    images.push({
      imageId,
      label: labelField === 0 ? null : labelField - 1,
      gridRows,
      gridCols,
      logits,
    })
  }
  if (offset !== data.length) throw new Error('trailing data after image payloads')
  const set: LogitSet = { nClasses, height, width, patchHeight, patchWidth,
                          strideH, strideW, images }
  validate(set)
  return set
}

export function writePlg(set: LogitSet, path: string): number {
  const buf = encodePlg(set)
  fs.writeFileSync(path, buf)
  return buf.length
}

export function readPlg(path: string): LogitSet {
  return decodePlg(fs.readFileSync(path))
}
