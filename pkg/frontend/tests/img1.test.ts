import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, describe, expect, it } from "vitest";

import { formatPhase, readImg1, readStack, writeImg1, writeStack } from "../src/img1.js";
import { DEFAULT_ROLE_MAP, PROTOCOL_TAGS, validateRoleMap } from "../src/roles.js";

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "simshot-frontend-"));

afterAll(() => {
  fs.rmSync(tmp, { recursive: true, force: true });
});

describe("IMG1 files", () => {
  it("round-trips data, dimensions, and pixel size", () => {
    const img = {
      width: 3,
      height: 2,
      pixelSizeNm: 219.5,
      data: Float32Array.from([0, 1.5, -2, 3.25, 4, 5]),
    };
    const file = path.join(tmp, "a.img1");
    writeImg1(file, img);
    const back = readImg1(file);
    expect(back.width).toBe(3);
    expect(back.height).toBe(2);
    expect(back.pixelSizeNm).toBeCloseTo(219.5, 12);
    expect([...back.data]).toEqual([...img.data]);
    expect(fs.statSync(file).size).toBe(24 + 4 * 6);
  });

  it("rejects corrupted headers", () => {
    const file = path.join(tmp, "bad.img1");
    writeImg1(file, { width: 1, height: 1, pixelSizeNm: 1, data: Float32Array.of(0) });
    const raw = fs.readFileSync(file);
    raw.write("XIMG", 0, "ascii");
    fs.writeFileSync(file, raw);
    expect(() => readImg1(file)).toThrow(/magic/);
  });
});

describe("stack directories", () => {
  it("round-trips six tagged slices through the manifest", () => {
    const dir = path.join(tmp, "stack");
    const entries = PROTOCOL_TAGS.map((tag, i) => ({
      tag,
      image: {
        width: 2,
        height: 2,
        pixelSizeNm: 219.5,
        data: Float32Array.from([i, i + 0.5, i + 1, i + 1.5]),
      },
    }));
    writeStack(dir, entries);
    const { slices, images } = readStack(dir);
    expect(slices.length).toBe(6);
    slices.forEach((slice, i) => {
      expect(slice.orientation).toBe(PROTOCOL_TAGS[i].orientation);
      expect(Math.abs(slice.phaseRad - PROTOCOL_TAGS[i].phaseRad)).toBeLessThan(1e-6);
      expect(images[i].data[0]).toBeCloseTo(i, 6);
    });
  });

  it("formats phases with nine significant digits", () => {
    expect(formatPhase(0)).toBe("0");
    expect(Number(formatPhase((2 * Math.PI) / 3))).toBeCloseTo(2.0943951, 6);
    expect(formatPhase((2 * Math.PI) / 3).length).toBeLessThanOrEqual(10);
  });
});

describe("role map", () => {
  it("accepts the default bijection", () => {
    expect(() => validateRoleMap(DEFAULT_ROLE_MAP)).not.toThrow();
  });

  it("rejects a missing role", () => {
    const partial = new Map(DEFAULT_ROLE_MAP);
    partial.delete(3);
    expect(() => validateRoleMap(partial)).toThrow(/1\.\.5/);
  });

  it("rejects duplicate targets and the input slice", () => {
    const dupes = new Map(DEFAULT_ROLE_MAP);
    dupes.set(2, DEFAULT_ROLE_MAP.get(1)!);
    expect(() => validateRoleMap(dupes)).toThrow(/twice/);
    const toInput = new Map(DEFAULT_ROLE_MAP);
    toInput.set(5, PROTOCOL_TAGS[0]);
    expect(() => validateRoleMap(toInput)).toThrow(/not a protocol slice/);
  });
});
