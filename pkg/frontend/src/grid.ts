/** Patch-grid enumeration and crop extraction over HWC float images. */

import { gridShape } from './plg'

/** Top-left (row, col) patch positions, row-major. */
export function gridPositions(height: number, width: number, patchHeight: number,
                              patchWidth: number, strideH: number,
                              strideW: number): Array<[number, number]> {
  const [rows, cols] = gridShape(height, width, patchHeight, patchWidth,
                                 strideH, strideW)
  const positions: Array<[number, number]> = []
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      positions.push([r * strideH, c * strideW])
    }
  }
  return positions
}

/** Copy the patch at (top, left) out of a row-major HWC pixel buffer. */
export function cropPatch(pixels: Float32Array, height: number, width: number,
                          channels: number, top: number, left: number,
                          patchHeight: number, patchWidth: number): Float32Array {
  if (top < 0 || left < 0 || top + patchHeight > height || left + patchWidth > width) {
    throw new Error(`out-of-bounds crop (${top}, ${left}) for ` +
                    `${patchHeight}x${patchWidth} in ${height}x${width}`)
  }
  const out = new Float32Array(patchHeight * patchWidth * channels)
  let m = 0
  for (let r = 0; r < patchHeight; r++) {
    const rowStart = ((top + r) * width + left) * channels
    for (let i = 0; i < patchWidth * channels; i++) {
      out[m++] = pixels[rowStart + i]
    }
  }
  return out
}
