//! A minimal register machine: `inc r`, `decjz r addr`, `halt`.
//!
//! Input goes into register 0, output is register 0 at halt. Falling off the
//! end of the program halts.

use std::fmt;
use std::str::FromStr;

use super::AdversaryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instr {
    Inc(usize),
    /// If the register is zero jump to the address, otherwise decrement it.
    DecJz(usize, usize),
    Halt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyProgram {
    instrs: Vec<Instr>,
    registers: usize,
}

impl ToyProgram {
    pub fn new(instrs: Vec<Instr>) -> Self {
        let registers = instrs
            .iter()
            .map(|i| match *i {
                Instr::Inc(r) | Instr::DecJz(r, _) => r + 1,
                Instr::Halt => 1,
            })
            .max()
            .unwrap_or(1);
        ToyProgram { instrs, registers }
    }

    pub fn instrs(&self) -> &[Instr] {
        &self.instrs
    }

    pub fn start(&self, input: u64) -> Machine {
        let mut regs = vec![0; self.registers];
        regs[0] = input;
        Machine {
            pc: 0,
            regs,
            steps: 0,
            halted: self.instrs.is_empty(),
        }
    }

    /// Output if the program halts on `input` within `budget` steps.
    pub fn run(&self, input: u64, budget: u64) -> Option<u64> {
        let mut m = self.start(input);
        m.advance(self, budget);
        m.output()
    }
}

/// Resumable execution state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Machine {
    pc: usize,
    regs: Vec<u64>,
    steps: u64,
    halted: bool,
}

impl Machine {
    /// Runs until halted or `budget` total steps have been spent.
    pub fn advance(&mut self, prog: &ToyProgram, budget: u64) {
        while !self.halted && self.steps < budget {
            self.steps += 1;
            match prog.instrs[self.pc] {
                Instr::Inc(r) => {
                    self.regs[r] += 1;
                    self.pc += 1;
                }
                Instr::DecJz(r, addr) => {
                    if self.regs[r] == 0 {
                        self.pc = addr;
                    } else {
                        self.regs[r] -= 1;
                        self.pc += 1;
                    }
                }
                Instr::Halt => {
                    self.halted = true;
                    continue;
                }
            }
            if self.pc >= prog.instrs.len() {
                self.halted = true;
            }
        }
    }

    pub fn output(&self) -> Option<u64> {
        self.halted.then(|| self.regs[0])
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Inc(r) => write!(f, "inc {r}"),
            Instr::DecJz(r, a) => write!(f, "decjz {r} {a}"),
            Instr::Halt => write!(f, "halt"),
        }
    }
}

impl FromStr for Instr {
    type Err = AdversaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AdversaryError::Parse(format!("bad instruction `{s}`"));
        let toks: Vec<&str> = s.split_whitespace().collect();
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
        match toks.as_slice() {
            ["inc", r] => Ok(Instr::Inc(num(r)?)),
            ["decjz", r, a] => Ok(Instr::DecJz(num(r)?, num(a)?)),
            ["halt"] => Ok(Instr::Halt),
            _ => Err(bad()),
        }
    }
}
