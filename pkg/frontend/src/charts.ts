/** Pure chart layout: map value series to SVG polyline coordinates. Layout
 * scaling is presentation, not domain arithmetic; the plotted values stay
 * the service's. */

export interface ChartLayout {
  width: number;
  height: number;
  padding: number;
}

export const DEFAULT_LAYOUT: ChartLayout = { width: 640, height: 200, padding: 8 };

export function polylinePoints(
  values: number[],
  layout: ChartLayout = DEFAULT_LAYOUT,
  bounds?: { min: number; max: number },
): string {
  if (values.length === 0) {
    return "";
  }
  const min = bounds ? bounds.min : Math.min(...values);
  const max = bounds ? bounds.max : Math.max(...values);
  const span = max - min || 1;
  const innerW = layout.width - 2 * layout.padding;
  const innerH = layout.height - 2 * layout.padding;
  const dx = values.length > 1 ? innerW / (values.length - 1) : 0;
  return values
    .map((v, i) => {
      const x = layout.padding + i * dx;
      const y = layout.padding + innerH * (1 - (v - min) / span);
      return `${x.toFixed(2)},${y.toFixed(2)}`;
    })
    .join(" ");
}

/** Shared bounds so two aligned series use one scale. */
export function sharedBounds(...series: number[][]): { min: number; max: number } {
  const all = series.flat();
  if (all.length === 0) {
    return { min: 0, max: 1 };
  }
  return { min: Math.min(...all), max: Math.max(...all) };
}
