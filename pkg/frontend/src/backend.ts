/** tf backend bootstrap: wasm when available, plain cpu otherwise. */
import * as tf from "@tensorflow/tfjs";
import * as path from "node:path";
import { createRequire } from "node:module";

let ready: Promise<string> | null = null;

export function initBackend(): Promise<string> {
  if (!ready) {
    ready = (async () => {
      if (process.env.TRAINER_BACKEND === "cpu") {
        await tf.setBackend("cpu");
        return tf.getBackend();
      }
      try {
        const wasm = await import("@tensorflow/tfjs-backend-wasm");
        const require = createRequire(import.meta.url);
        const dist = path.dirname(require.resolve("@tensorflow/tfjs-backend-wasm"));
        wasm.setWasmPaths(dist + path.sep);
        await tf.setBackend("wasm");
        await tf.ready();
      } catch {
        await tf.setBackend("cpu");
      }
      return tf.getBackend();
    })();
  }
  return ready;
}

export { tf };
