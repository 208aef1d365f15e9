/** Tensor-bundle writer: manifest.json plus raw little-endian row-major
 * payloads (f64 for floats, i64 for labels), matching the toolkit's
 * interchange format bit for bit. */

import * as fs from "node:fs";
import * as path from "node:path";

export type Dtype = "f64" | "i64";

export interface TensorSpec {
  name: string;
  dtype: Dtype;
  shape: number[];
  data: Float64Array | BigInt64Array;
}

const MANIFEST_VERSION = 1;

function payloadBytes(t: TensorSpec): Buffer {
  const count = t.shape.reduce((a, b) => a * b, 1);
  if (t.data.length !== count) {
    throw new Error(
      `tensor ${t.name}: shape ${JSON.stringify(t.shape)} needs ${count} values, got ${t.data.length}`,
    );
  }
  const buf = Buffer.allocUnsafe(count * 8);
  if (t.dtype === "f64") {
    const data = t.data as Float64Array;
    for (let i = 0; i < count; i++) {
      if (!Number.isFinite(data[i])) {
        throw new Error(`tensor ${t.name}: non-finite value at index ${i}`);
      }
      buf.writeDoubleLE(data[i], i * 8);
    }
  } else {
    const data = t.data as BigInt64Array;
    for (let i = 0; i < count; i++) buf.writeBigInt64LE(data[i], i * 8);
  }
  return buf;
}

export function writeBundle(
  dir: string,
  tensors: TensorSpec[],
  metadata: Record<string, string>,
): void {
  const names = new Set(tensors.map((t) => t.name));
  if (names.size !== tensors.length) {
    throw new Error("duplicate tensor names in bundle");
  }
  for (const required of ["activations", "weights", "labels"]) {
    if (!names.has(required)) {
      throw new Error(`bundle is missing required tensor '${required}'`);
    }
  }
  fs.mkdirSync(dir, { recursive: true });
  const manifest = {
    manifest_version: MANIFEST_VERSION,
    tensors: tensors.map((t) => ({
      name: t.name,
      dtype: t.dtype,
      shape: t.shape,
      data_path: `${t.name}.bin`,
    })),
    metadata,
  };
  for (const t of tensors) {
    fs.writeFileSync(path.join(dir, `${t.name}.bin`), payloadBytes(t));
  }
  fs.writeFileSync(
    path.join(dir, "manifest.json"),
    JSON.stringify(manifest, null, 2) + "\n",
  );
}

/** read one payload back (test helper; the Python toolkit is the real reader) */
export function readPayload(dir: string, name: string, dtype: Dtype): Float64Array | BigInt64Array {
  const raw = fs.readFileSync(path.join(dir, `${name}.bin`));
  const count = raw.length / 8;
  if (dtype === "f64") {
    const out = new Float64Array(count);
    for (let i = 0; i < count; i++) out[i] = raw.readDoubleLE(i * 8);
    return out;
  }
  const out = new BigInt64Array(count);
  for (let i = 0; i < count; i++) out[i] = raw.readBigInt64LE(i * 8);
  return out;
}
