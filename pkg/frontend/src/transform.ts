/** Viewport transform between image pixels and screen pixels.
 *
 * screen = image * scale + offset. Points are stored in image
 * coordinates only; the transform is applied at render time and
 * inverted on input, so zooming or panning never moves an annotation.
 */

export interface Vec2 {
  x: number;
  y: number;
}

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export const IDENTITY: ViewTransform = { scale: 1, offsetX: 0, offsetY: 0 };

export function imageToScreen(t: ViewTransform, p: Vec2): Vec2 {
  return { x: p.x * t.scale + t.offsetX, y: p.y * t.scale + t.offsetY };
}

export function screenToImage(t: ViewTransform, p: Vec2): Vec2 {
  return { x: (p.x - t.offsetX) / t.scale, y: (p.y - t.offsetY) / t.scale };
}

/** Scale about a fixed screen point, so the pixel under the cursor stays put. */
export function zoomAt(
  t: ViewTransform,
  screenPoint: Vec2,
  factor: number,
  minScale = 0.1,
  maxScale = 32,
): ViewTransform {
  const scale = Math.min(maxScale, Math.max(minScale, t.scale * factor));
  const anchor = screenToImage(t, screenPoint);
  return {
    scale,
    offsetX: screenPoint.x - anchor.x * scale,
    offsetY: screenPoint.y - anchor.y * scale,
  };
}

export function pan(t: ViewTransform, dx: number, dy: number): ViewTransform {
  return { scale: t.scale, offsetX: t.offsetX + dx, offsetY: t.offsetY + dy };
}

/** Letterbox an image into a viewport, centered. */
export function fitToViewport(
  imageW: number,
  imageH: number,
  viewW: number,
  viewH: number,
): ViewTransform {
  const scale = Math.min(viewW / imageW, viewH / imageH);
  return {
    scale,
    offsetX: (viewW - imageW * scale) / 2,
    offsetY: (viewH - imageH * scale) / 2,
  };
}

/** Clamp an image point to the frame (inclusive edges). */
export function clampToFrame(p: Vec2, width: number, height: number): Vec2 {
  return {
    x: Math.min(width, Math.max(0, p.x)),
    y: Math.min(height, Math.max(0, p.y)),
  };
}
