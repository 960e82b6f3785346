/** Backend selection: the native tfjs-node backend when the optional
 * package is installed (10-50x faster; needed for the full training
 * recipe), otherwise the portable pure-JS cpu backend. */

import * as tf from '@tensorflow/tfjs'

let initialized: Promise<string> | null = null

export function initBackend(): Promise<string> {
  if (initialized === null) {
    initialized = (async () => {
      try {
        require('@tensorflow/tfjs-node')
      } catch {
        await tf.setBackend('cpu')
      }
      await tf.ready()
      return tf.getBackend()
    })()
  }
  return initialized
}
