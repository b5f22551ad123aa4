#!/usr/bin/env python3
"""Maximize the common LMI margin of an SDPA file with cvxpy.

usage: sdpa_crosscheck.py FILE.dat-s [SOLVER]
"""
import sys, numpy as np, cvxpy as cp
def read(path):
    lines=[l for l in open(path) if l.strip() and not l.startswith(('"','*'))]
    m=int(lines[0].split()[0]); nb=int(lines[1].split()[0])
    sizes=[abs(int(s)) for s in lines[2].replace(',',' ').replace('{',' ').replace('}',' ').split() if s.lstrip('-').isdigit()][:nb]
    c=np.array([float(v) for v in lines[3].split()])
    F=[[np.zeros((n,n)) for n in sizes] for _ in range(m+1)]
    for l in lines[4:]:
        k,b,i,j,v=l.split(); k,b,i,j=int(k),int(b)-1,int(i)-1,int(j)-1; v=float(v)
        F[k][b][i,j]=v; F[k][b][j,i]=v
    return m,sizes,c,F
m,sizes,c,F=read(sys.argv[1])
x=cp.Variable(m); t=cp.Variable()
cons=[cp.norm(x,2)<=1e5]
for b,n in enumerate(sizes):
    # same per-block normalization as dsas-sdp
    s=max(1.0,max(np.abs(F[k][b]).max() for k in range(m+1)))
    expr=sum(x[k-1]*(F[k][b]/s) for k in range(1,m+1) if np.any(F[k][b]))-F[0][b]/s
    cons.append((expr+expr.T)/2>>t*np.eye(n))
prob=cp.Problem(cp.Maximize(t),cons)
prob.solve(solver=sys.argv[2] if len(sys.argv)>2 else "CLARABEL")
print(sys.argv[1], "vars",m,"blocks",len(sizes),"status",prob.status,"max margin t*",t.value)
