// Hand-built SVG charts: deterministic output, no rendering dependencies.

export interface Series {
  label: string
  x: number[]
  y: number[]
}

export interface AxesOptions {
  width?: number
  height?: number
  logX?: boolean
  logY?: boolean
  xLabel?: string
  yLabel?: string
  title?: string
  annotations?: string[]
}

const PALETTE = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b']
const MARGIN = { left: 64, right: 16, top: 36, bottom: 44 }

function fmt(v: number): string {
  if (!Number.isFinite(v)) return '0'
  return Number(v.toFixed(2)).toString()
}

function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo]
  const span = hi - lo
  const step = 10 ** Math.floor(Math.log10(span / n))
  const mult = [1, 2, 5, 10].find((m) => span / (step * m) <= n) ?? 10
  const s = step * mult
  const first = Math.ceil(lo / s) * s
  const out: number[] = []
  for (let v = first; v <= hi + 1e-12 * span; v += s) out.push(v)
  return out
}

function logTicks(lo: number, hi: number): number[] {
  const out: number[] = []
  for (let e = Math.ceil(lo); e <= Math.floor(hi) + 1e-12; e += 1) out.push(e)
  return out.length >= 2 ? out : [lo, hi]
}

export function lineChart(series: Series[], opts: AxesOptions = {}): string {
  const width = opts.width ?? 640
  const height = opts.height ?? 420
  const tx = (v: number) => (opts.logX ? Math.log10(v) : v)
  const ty = (v: number) => (opts.logY ? Math.log10(v) : v)
  const xs = series.flatMap((s) => s.x.filter((v, i) => Number.isFinite(v) && Number.isFinite(s.y[i]))).map(tx)
  const ys = series.flatMap((s) => s.y.filter((v, i) => Number.isFinite(v) && Number.isFinite(s.x[i]))).map(ty)
  const xlo = Math.min(...xs)
  const xhi = Math.max(...xs)
  const ylo = Math.min(...ys)
  const yhi = Math.max(...ys)
  const padY = (yhi - ylo || 1) * 0.05
  const plotW = width - MARGIN.left - MARGIN.right
  const plotH = height - MARGIN.top - MARGIN.bottom
  const px = (v: number) => MARGIN.left + ((tx(v) - xlo) / (xhi - xlo || 1)) * plotW
  const py = (v: number) => MARGIN.top + plotH - ((ty(v) - (ylo - padY)) / (yhi - ylo + 2 * padY || 1)) * plotH

  const parts: string[] = []
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`)
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`)
  if (opts.title) parts.push(`<text x="${width / 2}" y="20" text-anchor="middle" font-size="14">${opts.title}</text>`)

  const xticks = opts.logX ? logTicks(xlo, xhi) : niceTicks(xlo, xhi)
  const yticks = opts.logY ? logTicks(ylo - padY, yhi + padY) : niceTicks(ylo - padY, yhi + padY)
  for (const t of xticks) {
    const x = MARGIN.left + ((t - xlo) / (xhi - xlo || 1)) * plotW
    parts.push(`<line x1="${fmt(x)}" y1="${MARGIN.top}" x2="${fmt(x)}" y2="${MARGIN.top + plotH}" stroke="#ddd"/>`)
    const label = opts.logX ? `1e${t}` : fmt(t)
    parts.push(`<text x="${fmt(x)}" y="${MARGIN.top + plotH + 16}" text-anchor="middle">${label}</text>`)
  }
  for (const t of yticks) {
    const y = MARGIN.top + plotH - ((t - (ylo - padY)) / (yhi - ylo + 2 * padY || 1)) * plotH
    parts.push(`<line x1="${MARGIN.left}" y1="${fmt(y)}" x2="${MARGIN.left + plotW}" y2="${fmt(y)}" stroke="#ddd"/>`)
    const label = opts.logY ? `1e${t}` : fmt(t)
    parts.push(`<text x="${MARGIN.left - 6}" y="${fmt(y + 4)}" text-anchor="end">${label}</text>`)
  }
  parts.push(`<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#333"/>`)

  series.forEach((s, k) => {
    const color = PALETTE[k % PALETTE.length]
    const pts = s.x.map((v, i) => [v, s.y[i]] as const)
      .filter(([a, b]) => Number.isFinite(a) && Number.isFinite(b) && (!opts.logY || b > 0))
      .map(([a, b]) => `${fmt(px(a))},${fmt(py(b))}`)
    parts.push(`<polyline points="${pts.join(' ')}" fill="none" stroke="${color}" stroke-width="1.8"/>`)
    for (const p of pts) {
      const [cx, cy] = p.split(',')
      parts.push(`<circle cx="${cx}" cy="${cy}" r="3" fill="${color}"/>`)
    }
    parts.push(`<text x="${MARGIN.left + 10}" y="${MARGIN.top + 16 + 16 * k}" fill="${color}">${s.label}</text>`)
  })

  if (opts.xLabel) parts.push(`<text x="${MARGIN.left + plotW / 2}" y="${height - 8}" text-anchor="middle">${opts.xLabel}</text>`)
  if (opts.yLabel) parts.push(`<text x="14" y="${MARGIN.top + plotH / 2}" transform="rotate(-90 14 ${MARGIN.top + plotH / 2})" text-anchor="middle">${opts.yLabel}</text>`)
  const notes = opts.annotations ?? []
  notes.forEach((note, k) => {
    parts.push(`<text x="${width - MARGIN.right - 4}" y="${MARGIN.top + 16 + 16 * k}" text-anchor="end" fill="#333">${note}</text>`)
  })
  parts.push('</svg>')
  return parts.join('\n')
}

export interface BarGroup {
  label: string
  values: number[]   // one value per series
}

export function barChart(groups: BarGroup[], seriesLabels: string[], opts: AxesOptions = {}): string {
  const width = opts.width ?? 640
  const height = opts.height ?? 420
  const plotW = width - MARGIN.left - MARGIN.right
  const plotH = height - MARGIN.top - MARGIN.bottom
  const flat = groups.flatMap((g) => g.values).filter((v) => Number.isFinite(v))
  const vmax = Math.max(...flat, 0)
  const vmin = Math.min(...flat, 0)
  const span = vmax - vmin || 1
  const zeroY = MARGIN.top + plotH * (vmax / span)
  const bw = plotW / groups.length / (seriesLabels.length + 1)

  const parts: string[] = []
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`)
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`)
  if (opts.title) parts.push(`<text x="${width / 2}" y="20" text-anchor="middle" font-size="14">${opts.title}</text>`)
  parts.push(`<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#333"/>`)
  parts.push(`<line x1="${MARGIN.left}" y1="${fmt(zeroY)}" x2="${MARGIN.left + plotW}" y2="${fmt(zeroY)}" stroke="#888"/>`)

  groups.forEach((g, gi) => {
    const x0 = MARGIN.left + (gi + 0.5) * (plotW / groups.length)
    g.values.forEach((v, si) => {
      if (!Number.isFinite(v)) return
      const h = (Math.abs(v) / span) * plotH
      const y = v >= 0 ? zeroY - h : zeroY
      const x = x0 + (si - g.values.length / 2) * bw
      parts.push(`<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(bw * 0.9)}" height="${fmt(h)}" fill="${PALETTE[si % PALETTE.length]}"/>`)
    })
    parts.push(`<text x="${fmt(x0)}" y="${MARGIN.top + plotH + 16}" text-anchor="middle">${g.label}</text>`)
  })
  seriesLabels.forEach((label, k) => {
    parts.push(`<text x="${MARGIN.left + 10}" y="${MARGIN.top + 16 + 16 * k}" fill="${PALETTE[k % PALETTE.length]}">${label}</text>`)
  })
  const notes = opts.annotations ?? []
  notes.forEach((note, k) => {
    parts.push(`<text x="${width - MARGIN.right - 4}" y="${MARGIN.top + 16 + 16 * k}" text-anchor="end" fill="#333">${note}</text>`)
  })
  parts.push('</svg>')
  return parts.join('\n')
}
