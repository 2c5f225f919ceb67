import { describe, expect, it } from "vitest";

import {
  clampToFrame,
  fitToViewport,
  imageToScreen,
  pan,
  screenToImage,
  zoomAt,
  type ViewTransform,
} from "../src/transform.js";

const t: ViewTransform = { scale: 2.5, offsetX: -120.5, offsetY: 33.25 };

describe("coordinate round trips", () => {
  it("screenToImage inverts imageToScreen exactly in float", () => {
    for (const p of [
      { x: 0, y: 0 },
      { x: 640, y: 360 },
      { x: 17.25, y: 901.5 },
    ]) {
      const back = screenToImage(t, imageToScreen(t, p));
      expect(back.x).toBeCloseTo(p.x, 10);
      expect(back.y).toBeCloseTo(p.y, 10);
    }
  });

  it("zoom x2 then clicking screen (100,100) stores the inverse transform point", () => {
    const zoomed = zoomAt({ scale: 1, offsetX: 0, offsetY: 0 }, { x: 0, y: 0 }, 2);
    const image = screenToImage(zoomed, { x: 100, y: 100 });
    expect(image).toEqual({ x: 50, y: 50 });
    const rendered = imageToScreen(zoomed, image);
    expect(rendered).toEqual({ x: 100, y: 100 });
  });

  it("integer-pixel clicks land within 0.5 image pixels at zoom >= 1", () => {
    // worst case: the true target sits between two screen pixels; the click
    // rounds to the nearest integer screen pixel
    for (const scale of [1, 2, 3.7, 8]) {
      const view: ViewTransform = { scale, offsetX: 13.3, offsetY: -7.9 };
      for (const target of [
        { x: 100.49, y: 200.51 },
        { x: 0.25, y: 0.75 },
        { x: 321.123, y: 87.987 },
      ]) {
        const screen = imageToScreen(view, target);
        const click = { x: Math.round(screen.x), y: Math.round(screen.y) };
        const landed = screenToImage(view, click);
        expect(Math.abs(landed.x - target.x)).toBeLessThanOrEqual(0.5);
        expect(Math.abs(landed.y - target.y)).toBeLessThanOrEqual(0.5);
      }
    }
  });
});

describe("zoomAt", () => {
  it("keeps the anchor point fixed on screen", () => {
    const anchor = { x: 320, y: 240 };
    const before = screenToImage(t, anchor);
    const zoomed = zoomAt(t, anchor, 1.6);
    const after = screenToImage(zoomed, anchor);
    expect(after.x).toBeCloseTo(before.x, 9);
    expect(after.y).toBeCloseTo(before.y, 9);
    expect(zoomed.scale).toBeCloseTo(t.scale * 1.6, 12);
  });

  it("clamps the scale range", () => {
    const tiny = zoomAt(t, { x: 0, y: 0 }, 1e-9);
    expect(tiny.scale).toBe(0.1);
    const huge = zoomAt(t, { x: 0, y: 0 }, 1e9);
    expect(huge.scale).toBe(32);
  });
});

describe("fit and pan", () => {
  it("letterboxes a wide image into a square viewport", () => {
    const fit = fitToViewport(1280, 720, 800, 800);
    expect(fit.scale).toBeCloseTo(800 / 1280, 12);
    expect(fit.offsetX).toBe(0);
    expect(fit.offsetY).toBeCloseTo((800 - 720 * fit.scale) / 2, 9);
  });

  it("pan shifts offsets only", () => {
    const moved = pan(t, 10, -5);
    expect(moved).toEqual({ scale: t.scale, offsetX: t.offsetX + 10, offsetY: t.offsetY - 5 });
  });

  it("clampToFrame is inclusive of the edges", () => {
    expect(clampToFrame({ x: -3, y: 700 }, 800, 600)).toEqual({ x: 0, y: 600 });
    expect(clampToFrame({ x: 800, y: 0 }, 800, 600)).toEqual({ x: 800, y: 0 });
  });
});
