// Figure jobs: validate CSV schemas, render SVG, emit a numeric sidecar.
// The sidecar carries every fitted or extremal number drawn on the figure
// so results are recomputable from the CSV alone.

import { writeFileSync } from 'fs'

import { Table, column, numericColumn, readTable } from './csv.js'
import { convergenceSlope } from './fit.js'
import { BarGroup, barChart, lineChart } from './svg.js'

export type FigureKind = 'CONVERGENCE' | 'LAMBDA_SWEEP' | 'OUTLET_COMPARE' | 'ENERGY'

export interface FigureJob {
  kind: FigureKind
  inputs: string[]
  output: string
  title?: string
}

export class SchemaError extends Error {
  readonly missing: string[]

  constructor(kind: string, missing: string[]) {
    super(`${kind}: missing columns ${missing.join(', ')}`)
    this.missing = missing
  }
}

const REQUIRED: Record<FigureKind, string[]> = {
  CONVERGENCE: ['level', 'h', 'L2_vel', 'H1_vel', 'L2_pres'],
  LAMBDA_SWEEP: ['lambda', 'J', 'iterations', 'step'],
  OUTLET_COMPARE: ['condition', 'converged', 'iterations', 'final_rel_residual',
    'min_rel_residual_100', 'backflow_energy'],
  ENERGY: ['lhs', 'force_work', 'traction_work', 'ref_viscous', 'ref_convection_ww',
    'ref_convection_uwu', 'ddn_dissipation', 'identity_residual', 'backflow_energy'],
}

function checkSchema(kind: FigureKind, table: Table): void {
  const missing = REQUIRED[kind].filter((c) => !table.header.includes(c))
  if (missing.length > 0) throw new SchemaError(kind, missing)
}

interface Rendered {
  svg: string
  sidecar: string[]
}

function renderConvergence(table: Table): Rendered {
  const h = numericColumn(table, 'h')
  const sidecar: string[] = []
  const annotations: string[] = []
  const series = ['L2_vel', 'H1_vel', 'L2_pres'].map((name) => {
    const err = numericColumn(table, name)
    const fit = convergenceSlope(h, err)
    sidecar.push(`slope ${name} = ${fit.slope.toPrecision(17)} (last ${fit.points} levels)`)
    annotations.push(`${name}: slope ${fit.slope.toFixed(2)}`)
    return { label: name, x: h, y: err }
  })
  const svg = lineChart(series, {
    logX: true, logY: true, xLabel: 'h', yLabel: 'error',
    title: 'Convergence under refinement', annotations,
  })
  return { svg, sidecar }
}

function renderLambdaSweep(table: Table): Rendered {
  const lam = numericColumn(table, 'lambda')
  const j = numericColumn(table, 'J')
  for (let i = 1; i < lam.length; i += 1) {
    if (!(lam[i] > lam[i - 1])) throw new Error('lambda column must be strictly increasing')
  }
  let kmax = 0
  j.forEach((v, i) => { if (v > j[kmax]) kmax = i })
  const sidecar = [
    `max J = ${j[kmax].toPrecision(17)} at lambda = ${lam[kmax].toPrecision(17)}`,
    `final J = ${j[j.length - 1].toPrecision(17)}`,
  ]
  const svg = lineChart([{ label: 'J(lambda)', x: lam, y: j }], {
    xLabel: 'lambda', yLabel: 'gradient norm',
    title: 'Homotopy sweep', annotations: [`max J = ${j[kmax].toPrecision(6)}`],
  })
  return { svg, sidecar }
}

function renderOutletCompare(table: Table): Rendered {
  const conditions = column(table, 'condition')
  const finals = numericColumn(table, 'final_rel_residual')
  const mins = numericColumn(table, 'min_rel_residual_100')
  const backflow = numericColumn(table, 'backflow_energy')
  const log10 = (v: number) => (Number.isFinite(v) && v > 0 ? Math.log10(v) : NaN)
  const groups: BarGroup[] = conditions.map((c, i) => ({
    label: c,
    values: [log10(finals[i]), log10(mins[i])],
  }))
  const sidecar = conditions.map((c, i) =>
    `${c}: final_rel_residual = ${finals[i].toPrecision(17)}, `
    + `min_rel_residual_100 = ${mins[i].toPrecision(17)}, `
    + `backflow_energy = ${Number.isFinite(backflow[i]) ? backflow[i].toPrecision(17) : 'NA'}`)
  const svg = barChart(groups, ['log10 final residual', 'log10 min residual (100 it)'], {
    title: 'Outflow condition comparison',
    annotations: conditions.map((c, i) =>
      `${c} backflow: ${Number.isFinite(backflow[i]) ? backflow[i].toPrecision(3) : 'NA'}`),
  })
  return { svg, sidecar }
}

function renderEnergy(tables: Table[], names: string[]): Rendered {
  const terms = ['force_work', 'traction_work', 'ref_viscous', 'ref_convection_ww',
    'ref_convection_uwu', 'ddn_dissipation']
  const groups: BarGroup[] = terms.map((t) => ({
    label: t.replace('ref_convection_', 'conv_').replace('_work', ''),
    values: tables.map((tb) => numericColumn(tb, t)[0]),
  }))
  const sidecar: string[] = []
  tables.forEach((tb, i) => {
    const lhs = numericColumn(tb, 'lhs')[0]
    const backflow = numericColumn(tb, 'backflow_energy')[0]
    sidecar.push(`${names[i]}: lhs = ${lhs.toPrecision(17)}, backflow_energy = ${backflow.toPrecision(17)}`)
  })
  const svg = barChart(groups, names, {
    title: 'Energy identity terms',
    annotations: tables.map((tb, i) => `${names[i]} backflow: ${numericColumn(tb, 'backflow_energy')[0].toPrecision(3)}`),
  })
  return { svg, sidecar }
}

export function plot(job: FigureJob): { image: string, sidecar: string } {
  if (job.inputs.length === 0) throw new Error('figure job needs at least one input CSV')
  const tables = job.inputs.map(readTable)
  tables.forEach((t) => checkSchema(job.kind, t))
  let rendered: Rendered
  switch (job.kind) {
    case 'CONVERGENCE':
      rendered = renderConvergence(tables[0])
      break
    case 'LAMBDA_SWEEP':
      rendered = renderLambdaSweep(tables[0])
      break
    case 'OUTLET_COMPARE':
      rendered = renderOutletCompare(tables[0])
      break
    case 'ENERGY':
      rendered = renderEnergy(tables, job.inputs.map((p, i) => `run${i + 1}`))
      break
  }
  const sidecarPath = `${job.output}.txt`
  writeFileSync(job.output, rendered.svg + '\n')
  writeFileSync(sidecarPath, rendered.sidecar.join('\n') + '\n')
  return { image: job.output, sidecar: sidecarPath }
}
