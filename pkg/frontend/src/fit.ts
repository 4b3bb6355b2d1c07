// Least-squares slope fits for convergence studies.

export interface SlopeFit {
  slope: number
  intercept: number
  points: number
}

export function leastSquaresSlope(xs: number[], ys: number[]): SlopeFit {
  if (xs.length !== ys.length || xs.length < 2) {
    throw new Error('need at least two matched points for a slope fit')
  }
  const n = xs.length
  const mx = xs.reduce((a, b) => a + b, 0) / n
  const my = ys.reduce((a, b) => a + b, 0) / n
  let sxx = 0
  let sxy = 0
  for (let i = 0; i < n; i += 1) {
    sxx += (xs[i] - mx) * (xs[i] - mx)
    sxy += (xs[i] - mx) * (ys[i] - my)
  }
  if (sxx === 0) throw new Error('degenerate abscissa for a slope fit')
  const slope = sxy / sxx
  return { slope, intercept: my - slope * mx, points: n }
}

// Rates are fitted on the last three levels only: earlier levels are
// usually pre-asymptotic and pollute the estimate.
export function convergenceSlope(h: number[], err: number[], window = 3): SlopeFit {
  const keep: number[] = []
  for (let i = 0; i < h.length; i += 1) {
    if (Number.isFinite(err[i]) && err[i] > 0 && h[i] > 0) keep.push(i)
  }
  const tail = keep.slice(-window)
  if (tail.length < 2) throw new Error('not enough usable levels for a slope fit')
  return leastSquaresSlope(tail.map((i) => Math.log(h[i])), tail.map((i) => Math.log(err[i])))
}
